#pragma once

#include <string>

namespace fedgui {

// The full two-part system prompt used for training and evaluation.
// Byte-stable across invocations.
const std::string& render_system_prompt();

}  // namespace fedgui
