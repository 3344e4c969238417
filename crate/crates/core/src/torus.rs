//! Periodic partition machinery (offset maps).
