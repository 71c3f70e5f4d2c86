//! Model checkpoints.
//!
//! One file per model: a versioned plain-text header (kind, configuration,
//! parameter shapes, optimizer step counts) followed by the raw
//! little-endian 64-bit float arrays in declaration order — parameter
//! values first, then the optimizer's first and second moments. Identical
//! models serialize to identical bytes, and loading reproduces predictions
//! bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, EstimatorModel};
use crate::ranker::{RankerConfig, RankerModel};

const MAGIC: &str = "mteval-checkpoint v1";

/// A model restored from disk.
pub enum LoadedModel {
    Estimator(EstimatorModel),
    Ranker(RankerModel),
}

impl LoadedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedModel::Estimator(_) => "estimator",
            LoadedModel::Ranker(_) => "ranker",
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn write_header(
    w: &mut impl Write,
    kind: &str,
    config_toml: &str,
    params: &crate::autodiff::ParamSet,
    adam_t: &[u64],
) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "kind {kind}")?;
    writeln!(w, "config")?;
    for line in config_toml.lines() {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "end-config")?;
    for p in params.iter() {
        writeln!(w, "param {} {} {}", p.name, p.rows, p.cols)?;
    }
    let t_line: Vec<String> = adam_t.iter().map(|t| t.to_string()).collect();
    writeln!(w, "adam-t {}", t_line.join(" "))?;
    writeln!(w, "end-header")?;
    Ok(())
}

fn write_arrays(w: &mut impl Write, arrays: &[&[f64]]) -> Result<()> {
    for arr in arrays {
        for v in *arr {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn save(
    path: &Path,
    kind: &str,
    config_toml: &str,
    params: &crate::autodiff::ParamSet,
    adam: &crate::autodiff::AdamState,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, kind, config_toml, params, &adam.t)?;
    let mut arrays: Vec<&[f64]> = params.iter().map(|p| p.value.as_slice()).collect();
    arrays.extend(adam.m.iter().map(|m| m.as_slice()));
    arrays.extend(adam.v.iter().map(|v| v.as_slice()));
    write_arrays(&mut w, &arrays)?;
    w.flush()?;
    Ok(())
}

pub fn save_estimator(path: &Path, model: &EstimatorModel) -> Result<()> {
    let config = toml::to_string(&model.cfg).map_err(|e| bad(format!("config serialize: {e}")))?;
    save(path, "estimator", &config, &model.params, &model.adam)
}

pub fn save_ranker(path: &Path, model: &RankerModel) -> Result<()> {
    let config = toml::to_string(&model.cfg).map_err(|e| bad(format!("config serialize: {e}")))?;
    save(path, "ranker", &config, &model.params, &model.adam)
}

struct Header {
    kind: String,
    config_toml: String,
    shapes: Vec<(String, usize, usize)>,
    adam_t: Vec<u64>,
}

fn read_header(reader: &mut impl BufRead) -> Result<Header> {
    let mut line = String::new();
    let next = |reader: &mut dyn BufRead, line: &mut String| -> Result<String> {
        line.clear();
        if reader.read_line(line)? == 0 {
            return Err(bad("unexpected end of header"));
        }
        Ok(line.trim_end_matches('\n').to_string())
    };
    if next(reader, &mut line)? != MAGIC {
        return Err(bad("not a checkpoint file (bad magic line)"));
    }
    let kind_line = next(reader, &mut line)?;
    let kind = kind_line
        .strip_prefix("kind ")
        .ok_or_else(|| bad("missing kind line"))?
        .to_string();
    if next(reader, &mut line)? != "config" {
        return Err(bad("missing config section"));
    }
    let mut config_toml = String::new();
    loop {
        let l = next(reader, &mut line)?;
        if l == "end-config" {
            break;
        }
        config_toml.push_str(&l);
        config_toml.push('\n');
    }
    let mut shapes = Vec::new();
    let mut adam_t = Vec::new();
    loop {
        let l = next(reader, &mut line)?;
        if l == "end-header" {
            break;
        }
        if let Some(rest) = l.strip_prefix("param ") {
            let parts: Vec<&str> = rest.split(' ').collect();
            if parts.len() != 3 {
                return Err(bad(format!("malformed param line: {l}")));
            }
            let rows: usize = parts[1].parse().map_err(|_| bad("bad param rows"))?;
            let cols: usize = parts[2].parse().map_err(|_| bad("bad param cols"))?;
            shapes.push((parts[0].to_string(), rows, cols));
        } else if let Some(rest) = l.strip_prefix("adam-t ") {
            for t in rest.split(' ') {
                adam_t.push(t.parse().map_err(|_| bad("bad adam step count"))?);
            }
        } else {
            return Err(bad(format!("unexpected header line: {l}")));
        }
    }
    Ok(Header {
        kind,
        config_toml,
        shapes,
        adam_t,
    })
}

fn read_array(reader: &mut impl Read, len: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; len * 8];
    reader
        .read_exact(&mut buf)
        .map_err(|_| bad("truncated parameter data"))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn restore(
    header: &Header,
    reader: &mut impl Read,
    params: &mut crate::autodiff::ParamSet,
    adam: &mut crate::autodiff::AdamState,
) -> Result<()> {
    if header.shapes.len() != params.len() {
        return Err(bad(format!(
            "checkpoint has {} parameters, model expects {}",
            header.shapes.len(),
            params.len()
        )));
    }
    for (id, (name, rows, cols)) in header.shapes.iter().enumerate() {
        let p = params.get(id);
        if &p.name != name || p.rows != *rows || p.cols != *cols {
            return Err(bad(format!(
                "parameter mismatch at {id}: checkpoint {name} {rows}x{cols}, model {} {}x{}",
                p.name, p.rows, p.cols
            )));
        }
    }
    if header.adam_t.len() != params.len() {
        return Err(bad("optimizer step counts do not match the parameter count"));
    }
    for id in 0..params.len() {
        let len = params.get(id).len();
        params.get_mut(id).value = read_array(reader, len)?;
    }
    for id in 0..params.len() {
        adam.m[id] = read_array(reader, params.get(id).len())?;
    }
    for id in 0..params.len() {
        adam.v[id] = read_array(reader, params.get(id).len())?;
    }
    adam.t = header.adam_t.clone();
    let mut trailing = Vec::new();
    if reader.read_to_end(&mut trailing)? != 0 {
        return Err(bad("trailing bytes after parameter data"));
    }
    Ok(())
}

/// Loads either model kind; the file records which.
pub fn load(path: &Path) -> Result<LoadedModel> {
    let file = File::open(path).map_err(|e| bad(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let header = read_header(&mut reader)?;
    match header.kind.as_str() {
        "estimator" => {
            let cfg: EstimatorConfig = toml::from_str(&header.config_toml)
                .map_err(|e| bad(format!("config parse: {e}")))?;
            let mut model = EstimatorModel::new(cfg)?;
            restore(&header, &mut reader, &mut model.params, &mut model.adam)?;
            Ok(LoadedModel::Estimator(model))
        }
        "ranker" => {
            let cfg: RankerConfig = toml::from_str(&header.config_toml)
                .map_err(|e| bad(format!("config parse: {e}")))?;
            let mut model = RankerModel::new(cfg)?;
            restore(&header, &mut reader, &mut model.params, &mut model.adam)?;
            Ok(LoadedModel::Ranker(model))
        }
        other => Err(bad(format!("unknown model kind {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, EncoderKind};
    use tempfile::tempdir;

    fn tiny_ranker() -> RankerModel {
        RankerModel::new(RankerConfig {
            encoder: EncoderConfig {
                vocab_size: 64,
                d: 8,
                layers: 1,
                heads: 2,
                ff: 16,
                dropout: 0.0,
                kind: EncoderKind::Transformer,
            },
            layer_dropout: 0.0,
            margin: 1.0,
            lr: 1e-3,
            epochs: 1,
            batch_size: 4,
            reference_only: false,
            seed: 3,
        })
        .unwrap()
    }

    #[test]
    fn ranker_round_trip_reproduces_scores_bit_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ranker.ckpt");
        let mut model = tiny_ranker();
        let data: Vec<crate::ranker::RankQuadruple> = (0..4)
            .map(|i| crate::ranker::RankQuadruple {
                source: format!("src {i}"),
                better: format!("good {i}"),
                worse: format!("awful {i}"),
                reference: format!("good ref {i}"),
            })
            .collect();
        model.train(&data).unwrap();
        save_ranker(&path, &model).unwrap();
        let loaded = match load(&path).unwrap() {
            LoadedModel::Ranker(m) => m,
            _ => panic!("wrong kind"),
        };
        let a = model.score_one("src 0", "good 0", "good ref 0").unwrap();
        let b = loaded.score_one("src 0", "good 0", "good ref 0").unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(loaded.adam.t, model.adam.t);
    }

    #[test]
    fn resaving_a_loaded_model_is_byte_identical() {
        let dir = tempdir().unwrap();
        let first = dir.path().join("a.ckpt");
        let second = dir.path().join("b.ckpt");
        let model = tiny_ranker();
        save_ranker(&first, &model).unwrap();
        let loaded = match load(&first).unwrap() {
            LoadedModel::Ranker(m) => m,
            _ => panic!("wrong kind"),
        };
        save_ranker(&second, &loaded).unwrap();
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    }

    #[test]
    fn estimator_round_trip_reproduces_predictions() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("est.ckpt");
        let cfg = EstimatorConfig {
            encoder: EncoderConfig {
                vocab_size: 64,
                d: 8,
                layers: 1,
                heads: 2,
                ff: 16,
                dropout: 0.0,
                kind: EncoderKind::Transformer,
            },
            layer_dropout: 0.0,
            hidden: Some((12, 6)),
            head_dropout: 0.0,
            epochs: 1,
            frozen_epochs: 1,
            lr_head: 1e-3,
            lr_encoder: 1e-4,
            batch_size: 4,
            include_source_embedding: false,
            seed: 3,
        };
        let model = EstimatorModel::new(cfg).unwrap();
        save_estimator(&path, &model).unwrap();
        let loaded = match load(&path).unwrap() {
            LoadedModel::Estimator(m) => m,
            _ => panic!("wrong kind"),
        };
        let a = model.predict_one("quelle", "hyp text", "ref text").unwrap();
        let b = loaded.predict_one("quelle", "hyp text", "ref text").unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn garbage_files_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, "not a checkpoint\n").unwrap();
        assert!(matches!(load(&path), Err(Error::Checkpoint(_))));
    }
}
