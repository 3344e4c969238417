//! SVG emission.
