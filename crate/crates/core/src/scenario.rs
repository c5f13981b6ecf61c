//! Scenario ingestion and experiment orchestration (placeholder).
