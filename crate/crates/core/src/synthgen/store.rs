//! Dataset directories.
//!
//! ```text
//! manifest.json
//! features/<id>.bin          "MSQF", u32 version, u64 rows, u64 cols, f64 LE values
//! labels/<split>.weak.tsv    <id> \t <class>,<class>,...
//! labels/<split>.strong.tsv  <id> \t <onset> \t <offset> \t <class>   (strong datasets only)
//! labels/<split>.seq.tsv     <id> \t <class> <class> ...              (sequence datasets only)
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bag, Dataset, SynthConfig, SPLITS};
use crate::decoder::{read_intervals_tsv, write_intervals_tsv, EventInterval, TokenSequence};
use crate::error::{Error, Result};
use crate::objectives::WeakLabel;
use crate::scalar::Scalar;
use crate::tensor::DenseArray;

const FEATURE_MAGIC: &[u8; 4] = b"MSQF";
const FEATURE_VERSION: u32 = 1;
const MANIFEST_VERSION: u32 = 1;

/// Which labels get written to disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelLevel {
    /// Timed events; presence and sequence labels are re-derived on load.
    Strong,
    /// Untimed class sequences; presence is re-derived on load.
    Sequence,
    /// Presence/absence only.
    Weak,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    class_names: Vec<String>,
    feature_dim: usize,
    frame_rate: f64,
    labels: LabelLevel,
    splits: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<SynthConfig>,
}

fn write_features<T: Scalar>(path: &Path, a: &DenseArray<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FEATURE_MAGIC)?;
    w.write_all(&FEATURE_VERSION.to_le_bytes())?;
    w.write_all(&(a.rows() as u64).to_le_bytes())?;
    w.write_all(&(a.cols() as u64).to_le_bytes())?;
    for v in a.data() {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_features<T: Scalar>(path: &Path) -> Result<DenseArray<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let bad = |d: &str| Error::format("feature file", format!("{}: {}", path.display(), d));
    let mut head = [0u8; 24];
    r.read_exact(&mut head).map_err(|_| bad("truncated header"))?;
    if &head[..4] != FEATURE_MAGIC {
        return Err(bad("bad magic"));
    }
    if u32::from_le_bytes(head[4..8].try_into().unwrap()) != FEATURE_VERSION {
        return Err(bad("unsupported version"));
    }
    let rows = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != rows * cols * 8 {
        return Err(bad("payload length does not match shape"));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    DenseArray::matrix(rows, cols, data)
}

/// Writes `data` under `dir`, creating it if needed. With
/// [`LabelLevel::Weak`] only presence/absence labels are stored.
pub fn write_dataset<T: Scalar>(data: &Dataset<T>, dir: &Path, labels: LabelLevel) -> Result<()> {
    if labels == LabelLevel::Strong && !data.has_strong_labels() {
        return Err(Error::MissingLabels("strong labels"));
    }
    fs::create_dir_all(dir.join("features"))?;
    fs::create_dir_all(dir.join("labels"))?;
    let mut splits = BTreeMap::new();
    let mut frame_rate = None;
    for name in SPLITS {
        let bags = data.split(name).unwrap();
        let mut weak = BufWriter::new(File::create(dir.join("labels").join(format!("{}.weak.tsv", name)))?);
        let mut strong_rows = Vec::new();
        for bag in bags {
            match frame_rate {
                None => frame_rate = Some(bag.frame_rate),
                Some(r) if r != bag.frame_rate => {
                    return Err(Error::InvalidConfig("bags with differing frame rates".into()))
                }
                _ => {}
            }
            write_features(&dir.join("features").join(format!("{}.bin", bag.id)), &bag.features)?;
            let names: Vec<&str> = bag.weak.classes().map(|c| data.class_names[c].as_str()).collect();
            writeln!(weak, "{}\t{}", bag.id, names.join(","))?;
            if labels == LabelLevel::Strong {
                for e in bag.strong.as_ref().unwrap() {
                    strong_rows.push((bag.id.clone(), *e));
                }
            }
        }
        weak.flush()?;
        if labels == LabelLevel::Sequence {
            let f = File::create(dir.join("labels").join(format!("{}.seq.tsv", name)))?;
            let mut w = BufWriter::new(f);
            for bag in bags {
                let seq = bag.sequence.as_ref().unwrap();
                let names: Vec<&str> = seq.0.iter().map(|&c| data.class_names[c].as_str()).collect();
                writeln!(w, "{}\t{}", bag.id, names.join(" "))?;
            }
            w.flush()?;
        }
        if labels == LabelLevel::Strong {
            let f = File::create(dir.join("labels").join(format!("{}.strong.tsv", name)))?;
            let mut w = BufWriter::new(f);
            write_intervals_tsv(&mut w, &strong_rows, &data.class_names)?;
            w.flush()?;
        }
        splits.insert(name.to_string(), bags.iter().map(|b| b.id.clone()).collect());
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        class_names: data.class_names.clone(),
        feature_dim: data.feature_dim,
        frame_rate: frame_rate.unwrap_or(1.0),
        labels,
        splits,
        generator: data.config.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::format("manifest", e.to_string()))?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

fn read_weak(path: &Path, class_names: &[String]) -> Result<BTreeMap<String, WeakLabel>> {
    let mut out = BTreeMap::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |d: &str| Error::format("weak label row", format!("line {}: {}", n + 1, d));
        let (id, rest) = line.split_once('\t').ok_or_else(|| bad("missing tab"))?;
        let mut classes = Vec::new();
        for name in rest.split(',').filter(|s| !s.is_empty()) {
            classes.push(class_names.iter().position(|c| c == name).ok_or_else(|| bad("unknown class"))?);
        }
        out.insert(id.to_string(), WeakLabel::new(classes, class_names.len())?);
    }
    Ok(out)
}

fn read_sequences(path: &Path, class_names: &[String]) -> Result<BTreeMap<String, TokenSequence>> {
    let mut out = BTreeMap::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |d: &str| Error::format("sequence row", format!("line {}: {}", n + 1, d));
        let (id, rest) = line.split_once('\t').ok_or_else(|| bad("missing tab"))?;
        let mut seq = Vec::new();
        for name in rest.split_whitespace() {
            seq.push(class_names.iter().position(|c| c == name).ok_or_else(|| bad("unknown class"))?);
        }
        out.insert(id.to_string(), TokenSequence(seq));
    }
    Ok(out)
}

pub fn read_dataset<T: Scalar>(dir: &Path) -> Result<Dataset<T>> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::format("manifest", e.to_string()))?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::format("manifest", format!("unsupported version {}", m.version)));
    }
    let classes = m.class_names.len();
    let mut loaded = Vec::with_capacity(3);
    for name in SPLITS {
        let ids = m.splits.get(name).cloned().unwrap_or_default();
        let weak = read_weak(&dir.join("labels").join(format!("{}.weak.tsv", name)), &m.class_names)?;
        let mut strong: BTreeMap<String, Vec<EventInterval>> = BTreeMap::new();
        let mut sequences = if m.labels == LabelLevel::Sequence {
            read_sequences(&dir.join("labels").join(format!("{}.seq.tsv", name)), &m.class_names)?
        } else {
            BTreeMap::new()
        };
        if m.labels == LabelLevel::Strong {
            let f = BufReader::new(File::open(dir.join("labels").join(format!("{}.strong.tsv", name)))?);
            for (id, e) in read_intervals_tsv(f, &m.class_names)? {
                strong.entry(id).or_default().push(e);
            }
        }
        let mut bags = Vec::with_capacity(ids.len());
        for id in ids {
            let features: DenseArray<T> = read_features(&dir.join("features").join(format!("{}.bin", id)))?;
            if features.cols() != m.feature_dim {
                return Err(Error::format("feature file", format!("{}: {} columns, expected {}", id, features.cols(), m.feature_dim)));
            }
            let label = weak
                .get(&id)
                .cloned()
                .ok_or_else(|| Error::format("weak labels", format!("no row for {}", id)))?;
            let bag = match m.labels {
                LabelLevel::Strong => {
                    let events = strong.remove(&id).unwrap_or_default();
                    let bag = Bag::from_strong(id.clone(), features, m.frame_rate, events, classes)?;
                    if bag.weak != label {
                        return Err(Error::format("labels", format!("weak and strong labels disagree for {}", id)));
                    }
                    bag
                }
                LabelLevel::Sequence => {
                    let seq = sequences
                        .remove(&id)
                        .ok_or_else(|| Error::format("sequence labels", format!("no row for {}", id)))?;
                    let bag = Bag::from_sequence(id.clone(), features, m.frame_rate, seq, classes)?;
                    if bag.weak != label {
                        return Err(Error::format("labels", format!("weak and sequence labels disagree for {}", id)));
                    }
                    bag
                }
                LabelLevel::Weak => Bag::weak_only(id, features, m.frame_rate, label),
            };
            bags.push(bag);
        }
        loaded.push(bags);
    }
    let test = loaded.pop().unwrap();
    let valid = loaded.pop().unwrap();
    let train = loaded.pop().unwrap();
    Ok(Dataset {
        class_names: m.class_names,
        feature_dim: m.feature_dim,
        config: m.generator,
        train,
        valid,
        test,
    })
}
