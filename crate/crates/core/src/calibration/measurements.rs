use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "rsrp_dbm")]
    pub rsrp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_index: Option<usize>,
}

impl Measurement {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Georeferenced RSRP samples from the existing base stations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementSet {
    pub records: Vec<Measurement>,
}

impl MeasurementSet {
    pub fn new(records: Vec<Measurement>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        for required in ["x", "y", "rsrp_dbm"] {
            if !headers.iter().any(|h| h == required) {
                return Err(Error::Parse(format!(
                    "measurements: missing column `{required}`"
                )));
            }
        }
        let records = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<Measurement>, _>>()?;
        Ok(Self { records })
    }

    /// Writes `x,y,rsrp_dbm` plus `bs_index` when any record carries one.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let with_bs = self.records.iter().any(|m| m.bs_index.is_some());
        let mut w = csv::Writer::from_path(path)?;
        if with_bs {
            w.write_record(["x", "y", "rsrp_dbm", "bs_index"])?;
        } else {
            w.write_record(["x", "y", "rsrp_dbm"])?;
        }
        for m in &self.records {
            let mut row = vec![m.x.to_string(), m.y.to_string(), m.rsrp.to_string()];
            if with_bs {
                row.push(m.bs_index.map(|b| b.to_string()).unwrap_or_default());
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_bs_index() {
        let set =
            MeasurementSet::from_reader("x,y,rsrp_dbm\n1,2,-80.5\n3,4,-70\n".as_bytes()).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.records[0].bs_index, None);
        let set = MeasurementSet::from_reader(
            "x,y,rsrp_dbm,bs_index\n1,2,-80.5,0\n3,4,-70,\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(set.records[0].bs_index, Some(0));
        assert_eq!(set.records[1].bs_index, None);
    }

    #[test]
    fn missing_column_is_parse_error() {
        let err = MeasurementSet::from_reader("x,y\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let set = MeasurementSet::new(vec![
            Measurement {
                x: 0.1,
                y: 1.0 / 3.0,
                rsrp: -77.123456789,
                bs_index: None,
            },
            Measurement {
                x: 5.0,
                y: 6.0,
                rsrp: -90.0,
                bs_index: None,
            },
        ]);
        set.write_csv(&path).unwrap();
        assert_eq!(MeasurementSet::read_csv(&path).unwrap(), set);
    }
}
