//! LLM traffic generation (placeholder).
