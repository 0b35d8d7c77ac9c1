use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

fn csv_error(e: csv::Error) -> Error {
    if let Some(pos) = e.position() {
        return Error::Parse {
            line: pos.line() as usize,
            column: 1,
            message: e.to_string(),
        };
    }
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line: 0,
            column: 1,
            message: format!("{other:?}"),
        },
    }
}

/// Streaming CSV writer with a header row. Floats are written in their
/// shortest round-trip decimal form and every row is flushed, so a partial
/// table survives a failed run.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl RecordWriter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self::new(File::create(path)?))
    }
}

impl<W: Write> RecordWriter<W> {
    pub fn new(w: W) -> Self {
        Self {
            inner: csv::WriterBuilder::new().has_headers(true).from_writer(w),
        }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        self.inner.serialize(record).map_err(csv_error)?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = RecordWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    Ok(())
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path)?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct Row {
        t: f64,
        n: usize,
    }

    #[test]
    fn exact_round_trip() {
        let rows = vec![
            Row { t: 0.1 + 0.2, n: 1 },
            Row { t: -1e-300, n: 2 },
            Row { t: 1.0 / 3.0, n: 3 },
            Row { t: f64::MAX, n: 4 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_records(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,n\n"));
        assert_eq!(read_records::<Row>(&path).unwrap(), rows);
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,n\n1.0,2\nabc,3\n").unwrap();
        match read_records::<Row>(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
