//! Descriptor cache.
