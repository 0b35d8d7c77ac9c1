//! Output formats: legacy VTK snapshots and CSV tables.

pub mod records;
pub mod vtk;

pub use records::{read_records, write_records, RecordWriter};
pub use vtk::{read_vtk, VtkGrid};
