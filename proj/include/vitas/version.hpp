#pragma once

#define VITAS_KIT_VERSION_MAJOR 1
#define VITAS_KIT_VERSION_MINOR 0
#define VITAS_KIT_VERSION_PATCH 0
#define VITAS_KIT_VERSION "1.0.0"
