//! Experiment driver (placeholder).
