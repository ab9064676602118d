//! Per-command energy accounting (placeholder).
