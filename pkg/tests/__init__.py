# Tests package for MoonbeamAI 