#pragma once

#include <string_view>

#include "manimeval/python/syntax_tree.hpp"

namespace manimeval::python {

inline constexpr std::string_view kErrorKind = "Error";

/// Error-tolerant recursive-descent parse of Python 3 source.
///
/// Node kinds follow the standard library `ast` naming (Module, FunctionDef,
/// Assign, Call, Name, Constant, operator leaves such as Add, ...). A
/// statement that fails to parse becomes an `Error` node spanning the tokens
/// up to the end of its logical line (plus its indented block, when one
/// follows) and parsing resumes after it. Never throws; a catastrophic
/// internal failure yields a single-node tree of kind `Error`.
SyntaxTree parse(std::string_view source);

}  // namespace manimeval::python
