#include "sentinel/error.hpp"

namespace sentinel {

int exit_code(Stage stage) {
    switch (stage) {
        case Stage::config: return 2;
        case Stage::simulation: return 3;
        case Stage::evaluation: return 4;
        case Stage::io: return 5;
    }
    return 1;
}

const char* stage_name(Stage stage) {
    switch (stage) {
        case Stage::config: return "config";
        case Stage::simulation: return "simulation";
        case Stage::evaluation: return "evaluation";
        case Stage::io: return "io";
    }
    return "unknown";
}

}  // namespace sentinel
