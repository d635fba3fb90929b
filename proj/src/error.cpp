#include "axsym/error.hpp"

namespace axsym {

void throw_data(const std::string& msg) { throw DataError(msg); }

void throw_numerical(const std::string& msg) { throw NumericalError(msg); }

} // namespace axsym
