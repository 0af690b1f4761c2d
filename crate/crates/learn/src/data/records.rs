//! Image-sequence records and their JSON Lines files.
//!
//! One line per image sequence:
//!
//! ```json
//! {"formula":"F(p0)","atoms":["p0","p1"],"mode":"me","split":"train",
//!  "trace":[["p1"],["p0"]],"label":"accepted","images":[[812],[33]]}
//! ```
//!
//! `images[i]` lists one image id per atom of `trace[i]`, in the same
//! order; ids index the MNIST split named by `split`. Atom `pj` of the
//! alphabet is drawn as digit `j`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use tilr_core::{parse_formula, satisfies, Alphabet, Formula, SymbolicTrace, TraceMode};

use super::idx::{MnistStore, Split};
use super::sampling::LabelledTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Accepted,
    Rejected,
}

impl From<bool> for Label {
    fn from(accepted: bool) -> Self {
        if accepted {
            Label::Accepted
        } else {
            Label::Rejected
        }
    }
}

impl Label {
    pub fn accepted(self) -> bool {
        self == Label::Accepted
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub formula: String,
    pub atoms: Vec<String>,
    pub mode: String,
    pub split: Split,
    pub trace: Vec<Vec<String>>,
    pub label: Label,
    pub images: Vec<Vec<u32>>,
}

impl DatasetRecord {
    pub fn alphabet(&self) -> Result<Alphabet> {
        Ok(Alphabet::new(self.atoms.iter().cloned())?)
    }

    pub fn trace_mode(&self) -> Result<TraceMode> {
        Ok(self.mode.parse()?)
    }

    pub fn symbolic(&self, alphabet: &Alphabet) -> Result<SymbolicTrace> {
        Ok(SymbolicTrace::from_names(alphabet, &self.trace)?)
    }

    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }
}

/// `copies` image sequences per symbolic trace, each instant showing one
/// image of digit `j` for every atom `pj` that holds.
pub fn attach_images(
    traces: &[LabelledTrace],
    formula: &Formula,
    alphabet: &Alphabet,
    mode: TraceMode,
    store: &MnistStore,
    copies: usize,
    rng: &mut impl Rng,
) -> Result<Vec<DatasetRecord>> {
    if alphabet.len() > 10 {
        return Err(Error::Config(format!(
            "{} atoms but only 10 digit classes",
            alphabet.len()
        )));
    }
    if let Some(j) = (0..alphabet.len()).find(|&j| store.ids_of_digit(j).is_empty()) {
        return Err(Error::Data(format!(
            "the {} pool has no image of digit {j} (atom {})",
            store.split(),
            alphabet.name(j)
        )));
    }
    let formula_text = tilr_core::format_formula(formula);
    let mut out = Vec::with_capacity(traces.len() * copies);
    for t in traces {
        t.trace.validate(alphabet, Some(mode))?;
        for _ in 0..copies {
            let images = (0..t.trace.len())
                .map(|i| {
                    t.trace
                        .atoms_at(i)
                        .into_iter()
                        .map(|j| {
                            let pool = store.ids_of_digit(j);
                            pool[rng.gen_range(0..pool.len())]
                        })
                        .collect()
                })
                .collect();
            out.push(DatasetRecord {
                formula: formula_text.clone(),
                atoms: alphabet.atoms().to_vec(),
                mode: mode.to_string(),
                split: store.split(),
                trace: t.trace.names(alphabet),
                label: t.label.into(),
                images,
            });
        }
    }
    Ok(out)
}

pub fn write_dataset<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a DatasetRecord>,
) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut count = 0;
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::format(path, e.to_string()))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        count += 1;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(count)
}

/// Streaming reader that checks every record as it is read: the alphabet,
/// mode and trace are well formed, the label equals the crisp oracle on the
/// trace, and the images fit the trace. With a store attached, image ids
/// must exist in it and show the digit of their atom.
pub struct DatasetReader<'s> {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line: usize,
    store: Option<&'s MnistStore>,
    parsed: Option<(String, Vec<String>, Formula)>,
}

pub fn read_dataset(path: &Path) -> Result<DatasetReader<'static>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(DatasetReader {
        path: path.to_path_buf(),
        lines: BufReader::new(file).lines(),
        line: 0,
        store: None,
        parsed: None,
    })
}

impl<'s> DatasetReader<'s> {
    pub fn with_store<'t>(self, store: &'t MnistStore) -> DatasetReader<'t> {
        DatasetReader {
            path: self.path,
            lines: self.lines,
            line: self.line,
            store: Some(store),
            parsed: self.parsed,
        }
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Record {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    fn check(&mut self, r: &DatasetRecord) -> Result<()> {
        let alphabet = r.alphabet().map_err(|e| self.fail(e.to_string()))?;
        let mode = r.trace_mode().map_err(|e| self.fail(e.to_string()))?;
        let trace = r
            .symbolic(&alphabet)
            .map_err(|e| self.fail(e.to_string()))?;
        trace
            .validate(&alphabet, Some(mode))
            .map_err(|e| self.fail(e.to_string()))?;
        let cached = matches!(&self.parsed, Some((f, a, _)) if *f == r.formula && *a == r.atoms);
        if !cached {
            let f =
                parse_formula(&r.formula, &alphabet, &[]).map_err(|e| self.fail(e.to_string()))?;
            self.parsed = Some((r.formula.clone(), r.atoms.clone(), f));
        }
        let formula = &self.parsed.as_ref().expect("parsed").2;
        let accepted =
            satisfies(&trace, &alphabet, formula).map_err(|e| self.fail(e.to_string()))?;
        if accepted != r.label.accepted() {
            return Err(self.fail(format!(
                "label {:?} disagrees with the formula on this trace",
                r.label
            )));
        }
        if r.images.len() != trace.len() {
            return Err(self.fail(format!(
                "{} image groups for {} instants",
                r.images.len(),
                trace.len()
            )));
        }
        for (i, ids) in r.images.iter().enumerate() {
            let atoms = trace.atoms_at(i);
            if ids.len() != atoms.len() {
                return Err(self.fail(format!(
                    "instant {} has {} atoms but {} images",
                    i + 1,
                    atoms.len(),
                    ids.len()
                )));
            }
            if let Some(store) = self.store {
                if store.split() != r.split {
                    return Err(self.fail(format!(
                        "{} record checked against the {} pool",
                        r.split,
                        store.split()
                    )));
                }
                for (&id, &j) in ids.iter().zip(&atoms) {
                    if id as usize >= store.len() {
                        return Err(self.fail(format!(
                            "image id {id} out of range for {} images",
                            store.len()
                        )));
                    }
                    if store.label(id) as usize != j {
                        return Err(self.fail(format!(
                            "image {id} shows digit {} but atom {} needs digit {j}",
                            store.label(id),
                            alphabet.name(j)
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Iterator for DatasetReader<'_> {
    type Item = Result<DatasetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            self.line += 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: DatasetRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => return Some(Err(self.fail(e.to_string()))),
            };
            return Some(self.check(&record).map(|()| record));
        }
    }
}

/// Read and check a whole file.
pub fn load_dataset(path: &Path, store: Option<&MnistStore>) -> Result<Vec<DatasetRecord>> {
    let reader = read_dataset(path)?;
    match store {
        Some(s) => reader.with_store(s).collect(),
        None => reader.collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::idx::IdxImages;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn store(split: Split) -> MnistStore {
        let labels: Vec<u8> = (0..30).map(|k| (k % 10) as u8).collect();
        let images = IdxImages {
            count: 30,
            rows: 28,
            cols: 28,
            pixels: vec![0; 30 * 784],
        };
        MnistStore::new(split, images, labels).unwrap()
    }

    fn sample() -> (Formula, Alphabet, Vec<LabelledTrace>) {
        let a = Alphabet::numbered(2).unwrap();
        let f = parse_formula("F p0", &a, &[]).unwrap();
        let traces = [vec![vec![1], vec![0]], vec![vec![1, 0]], vec![vec![1]]]
            .iter()
            .map(|t| {
                let trace = SymbolicTrace::from_indices(t).unwrap();
                let label = satisfies(&trace, &a, &f).unwrap();
                LabelledTrace { trace, label }
            })
            .collect();
        (f, a, traces)
    }

    #[test]
    fn images_follow_the_digit_mapping() {
        let (f, a, traces) = sample();
        let s = store(Split::Train);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let recs = attach_images(&traces, &f, &a, TraceMode::Nme, &s, 5, &mut rng).unwrap();
        assert_eq!(recs.len(), 15);
        assert_eq!(recs[0].images.len(), 2);
        assert_eq!(s.label(recs[0].images[0][0]), 1);
        assert_eq!(recs[5].images[0].len(), 2);
        assert!(attach_images(&traces, &f, &a, TraceMode::Me, &s, 1, &mut rng).is_err());
    }

    #[test]
    fn round_trip_and_validation() {
        let (f, a, traces) = sample();
        let s = store(Split::Test);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let recs = attach_images(&traces, &f, &a, TraceMode::Nme, &s, 2, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        assert_eq!(write_dataset(&path, &recs).unwrap(), 6);
        assert_eq!(load_dataset(&path, Some(&s)).unwrap(), recs);

        let mut bad = recs.clone();
        bad[3].images[0][0] = 999;
        write_dataset(&path, &bad).unwrap();
        let err = load_dataset(&path, Some(&s)).unwrap_err().to_string();
        assert!(err.contains(":4:") && err.contains("out of range"), "{err}");
        assert!(load_dataset(&path, None).is_ok());

        let mut bad = recs.clone();
        bad[0].label = Label::Rejected;
        write_dataset(&path, &bad).unwrap();
        assert!(load_dataset(&path, None).is_err());

        write_dataset(&path, &recs).unwrap();
        assert!(load_dataset(&path, Some(&store(Split::Train))).is_err());
        std::fs::write(&path, "{\"formula\": 3}\n").unwrap();
        let err = load_dataset(&path, None).unwrap_err().to_string();
        assert!(err.contains(":1:"), "{err}");
    }
}
