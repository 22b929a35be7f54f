//! Dataset ingestion and persistence: newline-delimited JSON, one object
//! per line, fields mirroring [`UGCObject`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ugc::{UGCObject, UgcRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    File(String),
    Synthetic,
}

/// A validated set of objects sharing the series-length convention.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub objects: Vec<UGCObject>,
    pub source: DatasetSource,
    pub seed: Option<u64>,
    /// Shared series length.
    pub n: usize,
    /// Non-fatal findings from loading (e.g. objects filtered by age).
    pub warnings: Vec<String>,
}

/// Minimum object age in days; younger objects are filtered with a
/// warning because their long-term series is not yet stable.
pub const MIN_AGE_DAYS: u32 = 100;

/// Loads and validates an NDJSON dataset.
///
/// Hard errors: unparseable lines (with line diagnostics), series of the
/// wrong length, negative values. Objects younger than [`MIN_AGE_DAYS`]
/// are filtered out with a warning rather than an error.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader = BufReader::new(file);

    let mut parsed: Vec<UGCObject> = Vec::new();
    for (line_idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: UgcRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_idx + 1,
            msg: e.to_string(),
        })?;
        parsed.push(UGCObject::try_from(record)?);
    }
    if parsed.is_empty() {
        return Err(Error::Validation(format!("{} contains no objects", path.display())));
    }

    let n = parsed[0].series_len();
    let offenders: Vec<&str> = parsed
        .iter()
        .filter(|o| o.series_len() != n)
        .map(|o| o.object_id.as_str())
        .collect();
    if !offenders.is_empty() {
        return Err(Error::Validation(format!(
            "series length must be {n} for every object; offending ids: {}",
            offenders.join(", ")
        )));
    }

    let mut warnings = Vec::new();
    let objects: Vec<UGCObject> = parsed
        .into_iter()
        .filter(|o| {
            if o.age_days < MIN_AGE_DAYS {
                warnings.push(format!(
                    "filtered object {} aged {} days (< {MIN_AGE_DAYS})",
                    o.object_id, o.age_days
                ));
                false
            } else {
                true
            }
        })
        .collect();
    if objects.is_empty() {
        return Err(Error::Validation(
            "every object was filtered by the age threshold".into(),
        ));
    }

    Ok(DatasetManifest {
        objects,
        source: DatasetSource::File(path.display().to_string()),
        seed: None,
        n,
        warnings,
    })
}

/// Writes objects as NDJSON, one compact document per line.
pub fn save_dataset(objects: &[UGCObject], path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut writer = BufWriter::new(file);
    for obj in objects {
        let record = UgcRecord::from(obj);
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SyntheticConfig};
    use std::io::Write as _;

    #[test]
    fn round_trip_preserves_objects_bit_exactly() {
        let cfg = SyntheticConfig { count: 12, seed: 9, n: 20, ..SyntheticConfig::default() };
        let manifest = generate_synthetic(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.ndjson");
        save_dataset(&manifest.objects, &path).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.objects, manifest.objects);
        assert_eq!(loaded.n, 20);

        // Re-saving must reproduce the file byte for byte.
        let again = dir.path().join("again.ndjson");
        save_dataset(&loaded.objects, &again).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ndjson");
        let cfg = SyntheticConfig { count: 1, seed: 1, n: 8, ..SyntheticConfig::default() };
        let manifest = generate_synthetic(&cfg).unwrap();
        let good = serde_json::to_string(&crate::ugc::UgcRecord::from(&manifest.objects[0])).unwrap();
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "{good}").unwrap();
        writeln!(f, "{{not json").unwrap();
        drop(f);
        match load_dataset(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a parse error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn length_mismatch_names_the_offender() {
        let cfg = SyntheticConfig { count: 2, seed: 3, n: 10, ..SyntheticConfig::default() };
        let manifest = generate_synthetic(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.ndjson");
        let mut records: Vec<crate::ugc::UgcRecord> =
            manifest.objects.iter().map(crate::ugc::UgcRecord::from).collect();
        records[1].views.pop();
        records[1].comments.pop();
        records[1].favorites.pop();
        let mut f = std::fs::File::create(&path).unwrap();
        for r in &records {
            writeln!(f, "{}", serde_json::to_string(r).unwrap()).unwrap();
        }
        drop(f);
        match load_dataset(&path) {
            Err(Error::Validation(msg)) => {
                assert!(msg.contains(&manifest.objects[1].object_id), "message: {msg}")
            }
            other => panic!("expected a validation error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn negative_values_are_rejected() {
        let cfg = SyntheticConfig { count: 1, seed: 4, n: 8, ..SyntheticConfig::default() };
        let manifest = generate_synthetic(&cfg).unwrap();
        let mut record = crate::ugc::UgcRecord::from(&manifest.objects[0]);
        record.views[3] = -5.0;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.ndjson");
        std::fs::write(&path, format!("{}\n", serde_json::to_string(&record).unwrap())).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Validation(_))));
    }

    #[test]
    fn young_objects_are_filtered_with_a_warning() {
        let cfg = SyntheticConfig { count: 2, seed: 5, n: 8, ..SyntheticConfig::default() };
        let manifest = generate_synthetic(&cfg).unwrap();
        let mut records: Vec<crate::ugc::UgcRecord> =
            manifest.objects.iter().map(crate::ugc::UgcRecord::from).collect();
        records[0].age_days = 50;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.ndjson");
        let lines: Vec<String> =
            records.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        std::fs::write(&path, lines.join("\n")).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.objects.len(), 1);
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains(&records[0].object_id));
    }
}
