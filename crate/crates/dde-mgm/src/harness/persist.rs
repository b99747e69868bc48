//! Model persistence: a line-oriented text format with a CRC32 trailer.
//!
//! ```text
//! DDEMGM 1
//! config n=<n> s=<s> d=<d> tau=<t> r=<r> cells=<c1,...,cD>
//! class <label> geo=<G> trans=<T>
//! g <i1,...,iD> <count>            (G lines)
//! t <from coords>|<to coords> <count>   (T lines)
//! checksum <crc32 hex of all preceding bytes>
//! ```
//!
//! Counts are exact integers and floats are written in their shortest
//! round-trip form, so save -> load reproduces every count, the config,
//! and all derived totals exactly. A load either returns a complete model
//! or an error; no partial state escapes.

use std::collections::BTreeMap;
use std::path::Path;

use crate::classifier::OnlineClassifier;
use crate::embedding::{Cell, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::mgm::ClassModel;

const MAGIC: &str = "DDEMGM 1";

fn file_err(path: &str, reason: impl Into<String>) -> Error {
    Error::ModelFile {
        path: path.to_string(),
        reason: reason.into(),
    }
}

/// Serializes a classifier's config and models.
pub fn save_model_to_vec(classifier: &OnlineClassifier) -> Result<Vec<u8>> {
    use std::io::Write;

    let config = classifier.config();
    let mut out: Vec<u8> = Vec::new();
    writeln!(out, "{MAGIC}").expect("vec write");
    write!(
        out,
        "config n={} s={} d={} tau={} r={} cells=",
        config.n(),
        config.s(),
        config.d(),
        config.tau(),
        classifier.radius()
    )
    .expect("vec write");
    for (i, c) in config.cell_sizes().iter().enumerate() {
        if i > 0 {
            out.push(b',');
        }
        write!(out, "{c}").expect("vec write");
    }
    out.push(b'\n');

    let store = classifier.store().read();
    for (label, model) in store.iter() {
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(file_err(
                "<save>",
                format!("label `{label}` is empty or contains whitespace"),
            ));
        }
        let mut geo: Vec<(&Cell, u64)> = model.geo_counts().collect();
        geo.sort_by(|a, b| a.0.cmp(b.0));
        let mut trans: Vec<(&Cell, &Cell, u64)> = model.trans_counts().collect();
        trans.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        writeln!(out, "class {label} geo={} trans={}", geo.len(), trans.len())
            .expect("vec write");
        for (cell, count) in geo {
            writeln!(out, "g {cell} {count}").expect("vec write");
        }
        for (from, to, count) in trans {
            writeln!(out, "t {from}|{to} {count}").expect("vec write");
        }
    }

    let crc = crc32fast::hash(&out);
    writeln!(out, "checksum {crc:08x}").expect("vec write");
    Ok(out)
}

/// Writes the model file at `path`.
pub fn save_model(classifier: &OnlineClassifier, path: impl AsRef<Path>) -> Result<()> {
    let bytes = save_model_to_vec(classifier)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Reads a model file back into a classifier with fresh streams and
/// scores.
pub fn load_model(path: impl AsRef<Path>) -> Result<OnlineClassifier> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    load_model_from_slice(&bytes, &path.display().to_string())
}

/// Parses a model file from memory; `origin` labels errors.
pub fn load_model_from_slice(bytes: &[u8], origin: &str) -> Result<OnlineClassifier> {
    let text = std::str::from_utf8(bytes).map_err(|_| file_err(origin, "not valid UTF-8"))?;

    // Split off the checksum line and verify it covers everything before it.
    let trimmed = text.strip_suffix('\n').unwrap_or(text);
    let line_start = trimmed.rfind('\n').map(|i| i + 1).unwrap_or(0);
    let last_line = &trimmed[line_start..];
    let declared = last_line
        .strip_prefix("checksum ")
        .ok_or_else(|| file_err(origin, "missing checksum line; file truncated?"))?;
    let declared =
        u32::from_str_radix(declared.trim(), 16).map_err(|_| file_err(origin, "bad checksum"))?;
    let actual = crc32fast::hash(&bytes[..line_start]);
    if actual != declared {
        return Err(file_err(
            origin,
            format!("checksum mismatch: file says {declared:08x}, content is {actual:08x}"),
        ));
    }

    let mut lines = trimmed[..line_start].lines();
    let magic = lines.next().ok_or_else(|| file_err(origin, "empty file"))?;
    if magic != MAGIC {
        return Err(file_err(
            origin,
            format!("unsupported version line `{magic}`, expected `{MAGIC}`"),
        ));
    }
    let config_line = lines
        .next()
        .ok_or_else(|| file_err(origin, "missing config line"))?;
    let (config, radius) = parse_config_line(config_line, origin)?;

    let mut models: BTreeMap<String, ClassModel> = BTreeMap::new();
    while let Some(line) = lines.next() {
        let rest = line
            .strip_prefix("class ")
            .ok_or_else(|| file_err(origin, format!("expected class line, got `{line}`")))?;
        let mut parts = rest.split_whitespace();
        let label = parts
            .next()
            .ok_or_else(|| file_err(origin, "class line missing label"))?;
        let geo_n = parse_kv(parts.next(), "geo", origin)?;
        let trans_n = parse_kv(parts.next(), "trans", origin)?;

        let mut geo = Vec::with_capacity(geo_n);
        for _ in 0..geo_n {
            let line = lines
                .next()
                .ok_or_else(|| file_err(origin, "unexpected end of geographic counts"))?;
            let body = line
                .strip_prefix("g ")
                .ok_or_else(|| file_err(origin, format!("expected `g` line, got `{line}`")))?;
            let (cell_text, count_text) = body
                .rsplit_once(' ')
                .ok_or_else(|| file_err(origin, "malformed `g` line"))?;
            geo.push((
                parse_cell(cell_text, origin)?,
                parse_count(count_text, origin)?,
            ));
        }
        let mut trans = Vec::with_capacity(trans_n);
        for _ in 0..trans_n {
            let line = lines
                .next()
                .ok_or_else(|| file_err(origin, "unexpected end of transition counts"))?;
            let body = line
                .strip_prefix("t ")
                .ok_or_else(|| file_err(origin, format!("expected `t` line, got `{line}`")))?;
            let (pair_text, count_text) = body
                .rsplit_once(' ')
                .ok_or_else(|| file_err(origin, "malformed `t` line"))?;
            let (from_text, to_text) = pair_text
                .split_once('|')
                .ok_or_else(|| file_err(origin, "transition missing `|` separator"))?;
            trans.push((
                parse_cell(from_text, origin)?,
                parse_cell(to_text, origin)?,
                parse_count(count_text, origin)?,
            ));
        }

        let model = ClassModel::from_counts(config.clone(), geo, trans)
            .map_err(|e| file_err(origin, format!("class `{label}`: {e}")))?;
        if models.insert(label.to_string(), model).is_some() {
            return Err(file_err(origin, format!("duplicate class `{label}`")));
        }
    }

    Ok(OnlineClassifier::from_models(config, radius, models))
}

fn parse_config_line(line: &str, origin: &str) -> Result<(EmbeddingConfig, usize)> {
    let rest = line
        .strip_prefix("config ")
        .ok_or_else(|| file_err(origin, format!("expected config line, got `{line}`")))?;
    let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
    for token in rest.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| file_err(origin, format!("malformed config token `{token}`")))?;
        kv.insert(k, v);
    }
    let get = |key: &str| {
        kv.get(key)
            .copied()
            .ok_or_else(|| file_err(origin, format!("config missing `{key}`")))
    };
    let n: usize = parse_count(get("n")?, origin)? as usize;
    let s: usize = parse_count(get("s")?, origin)? as usize;
    let d: usize = parse_count(get("d")?, origin)? as usize;
    let tau: usize = parse_count(get("tau")?, origin)? as usize;
    let r: usize = parse_count(get("r")?, origin)? as usize;
    let cells_text = get("cells")?;
    let cells: Vec<f64> = cells_text
        .split(',')
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| file_err(origin, format!("bad cell size `{t}`")))
        })
        .collect::<Result<_>>()?;
    if cells.len() != n * d {
        return Err(file_err(
            origin,
            format!("expected {} cell sizes, got {}", n * d, cells.len()),
        ));
    }
    // Sizes are the per-dimension values replicated across delay copies.
    for copy in 1..d {
        if cells[copy * n..(copy + 1) * n] != cells[..n] {
            return Err(file_err(origin, "cell sizes are not replicated per copy"));
        }
    }
    let config = EmbeddingConfig::new(n, s, d, tau, &cells[..n])
        .map_err(|e| file_err(origin, format!("bad config: {e}")))?;
    Ok((config, r))
}

fn parse_kv(token: Option<&str>, key: &str, origin: &str) -> Result<usize> {
    let token = token.ok_or_else(|| file_err(origin, format!("class line missing `{key}=`")))?;
    let value = token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| file_err(origin, format!("expected `{key}=`, got `{token}`")))?;
    Ok(parse_count(value, origin)? as usize)
}

fn parse_count(text: &str, origin: &str) -> Result<u64> {
    text.trim()
        .parse()
        .map_err(|_| file_err(origin, format!("invalid integer `{text}`")))
}

fn parse_cell(text: &str, origin: &str) -> Result<Cell> {
    let indices: Vec<i64> = text
        .split(',')
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| file_err(origin, format!("invalid cell index `{t}`")))
        })
        .collect::<Result<_>>()?;
    Ok(Cell::new(indices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Series;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trained_classifier() -> OnlineClassifier {
        let config = EmbeddingConfig::new(2, 2, 2, 1, &[0.25, 0.5]).unwrap();
        let mut clf = OnlineClassifier::new(config, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for label in ["alpha", "beta"] {
            for _ in 0..3 {
                let rows: Vec<Vec<f64>> = (0..80)
                    .map(|i| {
                        let t = i as f64;
                        vec![
                            (t * 0.3).sin() + 0.05 * rng.gen_range(-1.0..1.0),
                            (t * 0.17).cos(),
                        ]
                    })
                    .collect();
                let series = Series::from_rows(&rows).unwrap();
                clf.train_series(label, &series).unwrap();
            }
        }
        clf
    }

    #[test]
    fn round_trip_reproduces_models_exactly() {
        let clf = trained_classifier();
        let bytes = save_model_to_vec(&clf).unwrap();
        let loaded = load_model_from_slice(&bytes, "mem").unwrap();
        assert_eq!(loaded.config(), clf.config());
        assert_eq!(loaded.radius(), clf.radius());
        let orig = clf.store().read();
        let back = loaded.store().read();
        assert_eq!(orig.len(), back.len());
        for (label, model) in orig.iter() {
            assert_eq!(&back[label], model);
        }
    }

    #[test]
    fn serialization_is_deterministic() {
        let clf = trained_classifier();
        assert_eq!(save_model_to_vec(&clf).unwrap(), save_model_to_vec(&clf).unwrap());
    }

    #[test]
    fn empty_classifier_round_trips() {
        let config = EmbeddingConfig::new(1, 1, 2, 1, &[0.1]).unwrap();
        let clf = OnlineClassifier::new(config.clone(), 2);
        let bytes = save_model_to_vec(&clf).unwrap();
        let loaded = load_model_from_slice(&bytes, "mem").unwrap();
        assert_eq!(loaded.config(), &config);
        assert_eq!(loaded.radius(), 2);
        assert!(loaded.store().read().is_empty());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let clf = trained_classifier();
        let bytes = save_model_to_vec(&clf).unwrap();
        let cut = bytes.len() - 20;
        let err = load_model_from_slice(&bytes[..cut], "mem").unwrap_err();
        assert!(matches!(err, Error::ModelFile { .. }));
    }

    #[test]
    fn corrupted_byte_fails_checksum() {
        let clf = trained_classifier();
        let mut bytes = save_model_to_vec(&clf).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] = bytes[mid].wrapping_add(1);
        let err = load_model_from_slice(&bytes, "mem").unwrap_err();
        match err {
            Error::ModelFile { reason, .. } => {
                assert!(
                    reason.contains("checksum") || reason.contains("invalid"),
                    "{reason}"
                )
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let clf = trained_classifier();
        let bytes = save_model_to_vec(&clf).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let swapped = text.replace("DDEMGM 1", "DDEMGM 9");
        // Re-stamp the checksum so only the version differs.
        let body_end = swapped.rfind("checksum ").unwrap();
        let crc = crc32fast::hash(&swapped.as_bytes()[..body_end]);
        let forged = format!("{}checksum {crc:08x}\n", &swapped[..body_end]);
        let err = load_model_from_slice(forged.as_bytes(), "mem").unwrap_err();
        match err {
            Error::ModelFile { reason, .. } => assert!(reason.contains("version"), "{reason}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn save_and_load_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ddemgm");
        let clf = trained_classifier();
        save_model(&clf, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(
            save_model_to_vec(&loaded).unwrap(),
            save_model_to_vec(&clf).unwrap()
        );
    }

    #[test]
    fn loaded_model_answers_queries_bit_for_bit() {
        let clf = trained_classifier();
        let bytes = save_model_to_vec(&clf).unwrap();
        let loaded = load_model_from_slice(&bytes, "mem").unwrap();
        let orig = clf.store().read();
        let back = loaded.store().read();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (label, model) in orig.iter() {
            let twin = &back[label];
            assert_eq!(model.geo_log_total(), twin.geo_log_total());
            for _ in 0..200 {
                let cell = Cell::new((0..4).map(|_| rng.gen_range(-30..30)).collect());
                let prev = Cell::new((0..4).map(|_| rng.gen_range(-30..30)).collect());
                assert_eq!(
                    model.geo_prob(&cell).unwrap(),
                    twin.geo_prob(&cell).unwrap()
                );
                assert_eq!(model.trans_prob(&cell, &prev), twin.trans_prob(&cell, &prev));
                assert_eq!(
                    model.trans_prob_neighborhood(&cell, &prev, 1),
                    twin.trans_prob_neighborhood(&cell, &prev, 1)
                );
            }
        }
    }
}
