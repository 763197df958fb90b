//! Browser demo.
