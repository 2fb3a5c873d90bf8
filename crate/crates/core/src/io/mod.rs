//! Files in and out: sample and graph containers, trajectories, exports
//! and plot layouts.

mod container;
mod export;
mod layout;
mod trajectory;

pub use container::{
    load_graph, load_samples, read_graph, read_samples, sample_digest, save_graph, save_samples,
    write_graph, write_samples, StoredSamples,
};
pub use export::{export_graph, node_records, Annotations, ExportFormat, NodeRecord};
pub use layout::{layout_2d, LayoutPoint};
pub use trajectory::{
    format_record, ingest_records, ingest_trajectories, parse_trajectories, RunIndex,
    TrajectoryRecord,
};
