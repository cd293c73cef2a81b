pub mod diagnose;
pub mod eval;
pub mod gen_data;
pub mod ingest;
pub mod train;
