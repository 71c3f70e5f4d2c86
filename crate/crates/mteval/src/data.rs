//! Tab-separated data files.
//!
//! All files are UTF-8 TSV with a mandatory header row; lines starting with
//! `#` before the header carry metadata and are skipped. Readers validate
//! the header and per-row column counts and report the first offending line
//! number. Fields may not contain tabs or newlines; writers enforce this.
//!
//! Schemas:
//! - eval tuples:   `src  hyp  ref  score`
//! - score input:   `src  hyp  ref` (a trailing `score` column is allowed)
//! - post-edits:    `src  hyp  ref  pe`
//! - error counts:  `src  hyp  ref  minor  major  critical`
//! - assessments:   `lang-pair  seg-id  system  src  hyp  ref  da-score`
//! - rankings:      `lang-pair  seg-id  sys-better  sys-worse  src  hyp-better  hyp-worse  ref`
//! - triple scores: input columns plus `model-score`
//! - pair scores:   `lang-pair  seg-id  sys-better  sys-worse  score-better  score-worse`
//! - reports:       `lang-pair  slice  pairs  concordant  discordant  tau`

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::EvalTuple;
use crate::human_scores::{DaSegment, DarrPair, MqmAnnotation, PostEditTuple};
use crate::metrics::{EvalReport, ReportRow, ScoredPair};
use crate::ranker::RankQuadruple;
use crate::text::words;

pub const EVAL_TUPLE_HEADER: [&str; 4] = ["src", "hyp", "ref", "score"];
pub const SCORE_INPUT_HEADER: [&str; 3] = ["src", "hyp", "ref"];
pub const PE_HEADER: [&str; 4] = ["src", "hyp", "ref", "pe"];
pub const MQM_HEADER: [&str; 6] = ["src", "hyp", "ref", "minor", "major", "critical"];
pub const DA_HEADER: [&str; 7] = ["lang-pair", "seg-id", "system", "src", "hyp", "ref", "da-score"];
pub const DARR_HEADER: [&str; 8] = [
    "lang-pair",
    "seg-id",
    "sys-better",
    "sys-worse",
    "src",
    "hyp-better",
    "hyp-worse",
    "ref",
];
pub const PAIR_SCORES_HEADER: [&str; 6] = [
    "lang-pair",
    "seg-id",
    "sys-better",
    "sys-worse",
    "score-better",
    "score-worse",
];
pub const REPORT_HEADER: [&str; 6] = ["lang-pair", "slice", "pairs", "concordant", "discordant", "tau"];

/// Raw rows of a TSV file with their 1-based line numbers.
struct RawTsv {
    rows: Vec<(usize, Vec<String>)>,
}

fn read_raw(path: &Path, expected_header: &[&str]) -> Result<RawTsv> {
    let file = File::open(path).map_err(|e| {
        Error::Invalid(format!("cannot open {}: {e}", path.display()))
    })?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(Error::Io)?;
        if !header_seen {
            if line.starts_with('#') {
                continue;
            }
            let header: Vec<&str> = line.split('\t').collect();
            if header != expected_header {
                return Err(Error::Data {
                    line: line_no,
                    msg: format!(
                        "header mismatch: expected {:?}, found {:?}",
                        expected_header.join("\t"),
                        line
                    ),
                });
            }
            header_seen = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(|s| s.to_string()).collect();
        if fields.len() != expected_header.len() {
            return Err(Error::Data {
                line: line_no,
                msg: format!(
                    "expected {} columns, found {}",
                    expected_header.len(),
                    fields.len()
                ),
            });
        }
        rows.push((line_no, fields));
    }
    if !header_seen {
        return Err(Error::Data {
            line: 1,
            msg: "missing header row".into(),
        });
    }
    Ok(RawTsv { rows })
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Data {
        line,
        msg: format!("cannot parse {what} {s:?} as a number"),
    })
}

fn parse_count(s: &str, line: usize, what: &str) -> Result<u32> {
    s.parse::<u32>().map_err(|_| Error::Data {
        line,
        msg: format!("cannot parse {what} {s:?} as a nonnegative integer"),
    })
}

fn check_field(field: &str) -> Result<()> {
    if field.contains('\t') || field.contains('\n') || field.contains('\r') {
        return Err(Error::Invalid(format!(
            "field contains a tab or newline: {field:?}"
        )));
    }
    Ok(())
}

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_row(w: &mut impl Write, fields: &[&str]) -> Result<()> {
    for f in fields {
        check_field(f)?;
    }
    writeln!(w, "{}", fields.join("\t"))?;
    Ok(())
}

// ── eval tuples ──────────────────────────────────────────────────────

pub fn read_eval_tuples(path: &Path) -> Result<Vec<EvalTuple>> {
    let raw = read_raw(path, &EVAL_TUPLE_HEADER)?;
    raw.rows
        .into_iter()
        .map(|(line, f)| {
            let tuple = EvalTuple {
                source: f[0].clone(),
                hypothesis: f[1].clone(),
                reference: f[2].clone(),
                score: parse_f64(&f[3], line, "score")?,
            };
            tuple.validate().map_err(|e| Error::Data {
                line,
                msg: e.to_string(),
            })?;
            Ok(tuple)
        })
        .collect()
}

pub fn write_eval_tuples(path: &Path, tuples: &[EvalTuple]) -> Result<()> {
    write_eval_tuples_with_comment(path, tuples, None)
}

pub fn write_eval_tuples_with_comment(
    path: &Path,
    tuples: &[EvalTuple],
    comment: Option<&str>,
) -> Result<()> {
    let mut w = open_writer(path)?;
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    write_row(&mut w, &EVAL_TUPLE_HEADER)?;
    for t in tuples {
        let score = format!("{}", t.score);
        write_row(&mut w, &[&t.source, &t.hypothesis, &t.reference, &score])?;
    }
    Ok(())
}

// ── score input (bare triples, optional score column tolerated) ──────

/// Rows accepted by the scoring command: src/hyp/ref with or without a
/// trailing score column.
pub fn read_score_input(path: &Path) -> Result<Vec<(String, String, String)>> {
    match read_raw(path, &SCORE_INPUT_HEADER) {
        Ok(raw) => raw
            .rows
            .into_iter()
            .map(|(_, f)| Ok((f[0].clone(), f[1].clone(), f[2].clone())))
            .collect(),
        Err(Error::Data { .. }) => {
            // retry with the 4-column schema; the score column is ignored
            let raw = read_raw(path, &EVAL_TUPLE_HEADER)?;
            raw.rows
                .into_iter()
                .map(|(_, f)| Ok((f[0].clone(), f[1].clone(), f[2].clone())))
                .collect()
        }
        Err(e) => Err(e),
    }
}

/// Writes scoring output: the input triple plus the model score, row-aligned.
pub fn write_triple_scores(
    path: &Path,
    triples: &[(String, String, String)],
    scores: &[f64],
) -> Result<()> {
    let mut w = open_writer(path)?;
    write_row(&mut w, &["src", "hyp", "ref", "model-score"])?;
    for ((s, h, r), score) in triples.iter().zip(scores) {
        let score = format!("{score}");
        write_row(&mut w, &[s, h, r, &score])?;
    }
    Ok(())
}

// ── post-edit tuples ─────────────────────────────────────────────────

pub fn read_pe_tuples(path: &Path) -> Result<Vec<PostEditTuple>> {
    let raw = read_raw(path, &PE_HEADER)?;
    raw.rows
        .into_iter()
        .map(|(line, f)| {
            for (idx, name) in ["src", "hyp", "ref", "pe"].iter().enumerate() {
                if f[idx].trim().is_empty() {
                    return Err(Error::Data {
                        line,
                        msg: format!("empty {name} field"),
                    });
                }
            }
            Ok(PostEditTuple {
                source: f[0].clone(),
                hypothesis: f[1].clone(),
                reference: f[2].clone(),
                post_edit: f[3].clone(),
            })
        })
        .collect()
}

pub fn write_pe_tuples(path: &Path, tuples: &[PostEditTuple]) -> Result<()> {
    let mut w = open_writer(path)?;
    write_row(&mut w, &PE_HEADER)?;
    for t in tuples {
        write_row(&mut w, &[&t.source, &t.hypothesis, &t.reference, &t.post_edit])?;
    }
    Ok(())
}

// ── error-count annotations ──────────────────────────────────────────

/// Annotated rows for severity scoring; sentence length is the hypothesis
/// token count.
pub fn read_mqm_rows(path: &Path) -> Result<Vec<(EvalTuple, MqmAnnotation)>> {
    let raw = read_raw(path, &MQM_HEADER)?;
    raw.rows
        .into_iter()
        .map(|(line, f)| {
            let length = words(&f[1]).len();
            if length == 0 {
                return Err(Error::Data {
                    line,
                    msg: "hypothesis has no tokens".into(),
                });
            }
            let ann = MqmAnnotation {
                minor: parse_count(&f[3], line, "minor count")?,
                major: parse_count(&f[4], line, "major count")?,
                critical: parse_count(&f[5], line, "critical count")?,
                sentence_length: length,
            };
            let tuple = EvalTuple {
                source: f[0].clone(),
                hypothesis: f[1].clone(),
                reference: f[2].clone(),
                score: 0.0,
            };
            Ok((tuple, ann))
        })
        .collect()
}

pub fn write_mqm_rows(path: &Path, rows: &[(EvalTuple, MqmAnnotation)]) -> Result<()> {
    let mut w = open_writer(path)?;
    write_row(&mut w, &MQM_HEADER)?;
    for (t, a) in rows {
        let (minor, major, critical) =
            (a.minor.to_string(), a.major.to_string(), a.critical.to_string());
        write_row(
            &mut w,
            &[&t.source, &t.hypothesis, &t.reference, &minor, &major, &critical],
        )?;
    }
    Ok(())
}

// ── direct assessments ───────────────────────────────────────────────

pub fn read_da_segments(path: &Path) -> Result<Vec<DaSegment>> {
    let raw = read_raw(path, &DA_HEADER)?;
    raw.rows
        .into_iter()
        .map(|(line, f)| {
            Ok(DaSegment {
                lang_pair: f[0].clone(),
                seg_id: f[1].clone(),
                system: f[2].clone(),
                source: f[3].clone(),
                hypothesis: f[4].clone(),
                reference: f[5].clone(),
                da_score: parse_f64(&f[6], line, "da-score")?,
            })
        })
        .collect()
}

pub fn write_da_segments(path: &Path, segments: &[DaSegment]) -> Result<()> {
    let mut w = open_writer(path)?;
    write_row(&mut w, &DA_HEADER)?;
    for s in segments {
        let score = format!("{}", s.da_score);
        write_row(
            &mut w,
            &[&s.lang_pair, &s.seg_id, &s.system, &s.source, &s.hypothesis, &s.reference, &score],
        )?;
    }
    Ok(())
}

// ── ranking pairs ────────────────────────────────────────────────────

pub fn read_darr_pairs(path: &Path) -> Result<Vec<DarrPair>> {
    let raw = read_raw(path, &DARR_HEADER)?;
    raw.rows
        .into_iter()
        .map(|(line, f)| {
            let pair = DarrPair {
                lang_pair: f[0].clone(),
                seg_id: f[1].clone(),
                sys_better: f[2].clone(),
                sys_worse: f[3].clone(),
                source: f[4].clone(),
                hyp_better: f[5].clone(),
                hyp_worse: f[6].clone(),
                reference: f[7].clone(),
            };
            let quad = RankQuadruple {
                source: pair.source.clone(),
                better: pair.hyp_better.clone(),
                worse: pair.hyp_worse.clone(),
                reference: pair.reference.clone(),
            };
            quad.validate().map_err(|e| Error::Data {
                line,
                msg: e.to_string(),
            })?;
            Ok(pair)
        })
        .collect()
}

pub fn write_darr_pairs(path: &Path, pairs: &[DarrPair]) -> Result<()> {
    let mut w = open_writer(path)?;
    write_row(&mut w, &DARR_HEADER)?;
    for p in pairs {
        write_row(
            &mut w,
            &[
                &p.lang_pair,
                &p.seg_id,
                &p.sys_better,
                &p.sys_worse,
                &p.source,
                &p.hyp_better,
                &p.hyp_worse,
                &p.reference,
            ],
        )?;
    }
    Ok(())
}

/// Training quadruples from ranking pairs.
pub fn darr_to_quadruples(pairs: &[DarrPair]) -> Vec<RankQuadruple> {
    pairs
        .iter()
        .map(|p| RankQuadruple {
            source: p.source.clone(),
            better: p.hyp_better.clone(),
            worse: p.hyp_worse.clone(),
            reference: p.reference.clone(),
        })
        .collect()
}

// ── pair scores ──────────────────────────────────────────────────────

pub fn read_pair_scores(path: &Path) -> Result<Vec<ScoredPair>> {
    let raw = read_raw(path, &PAIR_SCORES_HEADER)?;
    raw.rows
        .into_iter()
        .map(|(line, f)| {
            Ok(ScoredPair {
                lang_pair: f[0].clone(),
                seg_id: f[1].clone(),
                sys_better: f[2].clone(),
                sys_worse: f[3].clone(),
                score_better: parse_f64(&f[4], line, "score-better")?,
                score_worse: parse_f64(&f[5], line, "score-worse")?,
            })
        })
        .collect()
}

pub fn write_pair_scores(path: &Path, pairs: &[ScoredPair]) -> Result<()> {
    let mut w = open_writer(path)?;
    write_row(&mut w, &PAIR_SCORES_HEADER)?;
    for p in pairs {
        let (sb, sw) = (format!("{}", p.score_better), format!("{}", p.score_worse));
        write_row(
            &mut w,
            &[&p.lang_pair, &p.seg_id, &p.sys_better, &p.sys_worse, &sb, &sw],
        )?;
    }
    Ok(())
}

// ── reports ──────────────────────────────────────────────────────────

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = open_writer(path)?;
    write_row(&mut w, &REPORT_HEADER)?;
    for r in &report.rows {
        let pairs = r.pairs.to_string();
        let (c, d) = (r.concordant.to_string(), r.discordant.to_string());
        let tau = format!("{}", r.tau);
        write_row(&mut w, &[&r.lang_pair, &r.slice, &pairs, &c, &d, &tau])?;
    }
    Ok(())
}

pub const ABLATION_HEADER: [&str; 5] =
    ["lang-pair", "pairs", "tau-ref-only", "tau-full", "delta-tau"];

pub fn write_ablation_report(path: &Path, rows: &[crate::ablation::AblationRow]) -> Result<()> {
    let mut w = open_writer(path)?;
    write_row(&mut w, &ABLATION_HEADER)?;
    for r in rows {
        let pairs = r.pairs.to_string();
        let (a, b, d) = (
            format!("{}", r.tau_ref_only),
            format!("{}", r.tau_full),
            format!("{}", r.delta_tau),
        );
        write_row(&mut w, &[&r.lang_pair, &pairs, &a, &b, &d])?;
    }
    Ok(())
}

pub fn read_ablation_report(path: &Path) -> Result<Vec<crate::ablation::AblationRow>> {
    let raw = read_raw(path, &ABLATION_HEADER)?;
    raw.rows
        .into_iter()
        .map(|(line, f)| {
            Ok(crate::ablation::AblationRow {
                lang_pair: f[0].clone(),
                pairs: f[1].parse().map_err(|_| Error::Data {
                    line,
                    msg: format!("bad pair count {:?}", f[1]),
                })?,
                tau_ref_only: parse_f64(&f[2], line, "tau-ref-only")?,
                tau_full: parse_f64(&f[3], line, "tau-full")?,
                delta_tau: parse_f64(&f[4], line, "delta-tau")?,
            })
        })
        .collect()
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    let raw = read_raw(path, &REPORT_HEADER)?;
    let rows = raw
        .rows
        .into_iter()
        .map(|(line, f)| {
            Ok(ReportRow {
                lang_pair: f[0].clone(),
                slice: f[1].clone(),
                pairs: f[2].parse().map_err(|_| Error::Data {
                    line,
                    msg: format!("bad pair count {:?}", f[2]),
                })?,
                concordant: f[3].parse().map_err(|_| Error::Data {
                    line,
                    msg: format!("bad concordant count {:?}", f[3]),
                })?,
                discordant: f[4].parse().map_err(|_| Error::Data {
                    line,
                    msg: format!("bad discordant count {:?}", f[4]),
                })?,
                tau: parse_f64(&f[5], line, "tau")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn eval_tuples_round_trip_with_zero_diffs() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tuples.tsv");
        let tuples = vec![
            EvalTuple {
                source: "ein haus".into(),
                hypothesis: "a house".into(),
                reference: "one house".into(),
                score: 0.25,
            },
            EvalTuple {
                source: "zwei".into(),
                hypothesis: "two".into(),
                reference: "two".into(),
                score: 0.0,
            },
        ];
        write_eval_tuples(&path, &tuples).unwrap();
        let back = read_eval_tuples(&path).unwrap();
        assert_eq!(back, tuples);
        let second = dir.path().join("again.tsv");
        write_eval_tuples(&second, &back).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(&second).unwrap()
        );
    }

    #[test]
    fn wrong_column_count_reports_the_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "src\thyp\tref\tscore\na\tb\tc\t0.5\nx\ty\n").unwrap();
        match read_eval_tuples(&path) {
            Err(Error::Data { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a data error, got {other:?}"),
        }
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "source\thyp\tref\tscore\n").unwrap();
        assert!(matches!(read_eval_tuples(&path), Err(Error::Data { line: 1, .. })));
    }

    #[test]
    fn leading_comment_lines_are_skipped() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("commented.tsv");
        std::fs::write(
            &path,
            "# length-basis: hypothesis\nsrc\thyp\tref\tscore\na\tb\tc\t0.5\n",
        )
        .unwrap();
        assert_eq!(read_eval_tuples(&path).unwrap().len(), 1);
    }

    #[test]
    fn score_input_accepts_both_shapes() {
        let dir = tempdir().unwrap();
        let bare = dir.path().join("bare.tsv");
        std::fs::write(&bare, "src\thyp\tref\na\tb\tc\n").unwrap();
        assert_eq!(read_score_input(&bare).unwrap().len(), 1);
        let scored = dir.path().join("scored.tsv");
        std::fs::write(&scored, "src\thyp\tref\tscore\na\tb\tc\t0.1\n").unwrap();
        assert_eq!(read_score_input(&scored).unwrap().len(), 1);
    }

    #[test]
    fn darr_round_trip_and_validation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("darr.tsv");
        let pairs = vec![DarrPair {
            lang_pair: "xx-yy".into(),
            seg_id: "1".into(),
            sys_better: "sa".into(),
            sys_worse: "sb".into(),
            source: "quelle".into(),
            hyp_better: "good one".into(),
            hyp_worse: "bad one".into(),
            reference: "the good one".into(),
        }];
        write_darr_pairs(&path, &pairs).unwrap();
        assert_eq!(read_darr_pairs(&path).unwrap(), pairs);

        let bad = dir.path().join("bad.tsv");
        std::fs::write(
            &bad,
            "lang-pair\tseg-id\tsys-better\tsys-worse\tsrc\thyp-better\thyp-worse\tref\nxx\t1\ta\tb\ts\tsame\tsame\tr\n",
        )
        .unwrap();
        assert!(matches!(read_darr_pairs(&bad), Err(Error::Data { line: 2, .. })));
    }

    #[test]
    fn every_writer_round_trips_through_its_reader() {
        let dir = tempdir().unwrap();
        let d = dir.path();

        let pe = vec![PostEditTuple {
            source: "s".into(),
            hypothesis: "h".into(),
            reference: "r".into(),
            post_edit: "p".into(),
        }];
        write_pe_tuples(&d.join("pe.tsv"), &pe).unwrap();
        assert_eq!(read_pe_tuples(&d.join("pe.tsv")).unwrap(), pe);

        let mqm = vec![(
            EvalTuple {
                source: "s".into(),
                hypothesis: "three word hyp".into(),
                reference: "r".into(),
                score: 0.0,
            },
            MqmAnnotation {
                minor: 1,
                major: 2,
                critical: 0,
                sentence_length: 3,
            },
        )];
        write_mqm_rows(&d.join("mqm.tsv"), &mqm).unwrap();
        assert_eq!(read_mqm_rows(&d.join("mqm.tsv")).unwrap(), mqm);

        let da = vec![DaSegment {
            lang_pair: "aa-bb".into(),
            seg_id: "1".into(),
            system: "sys".into(),
            da_score: 72.5,
            source: "s".into(),
            hypothesis: "h".into(),
            reference: "r".into(),
        }];
        write_da_segments(&d.join("da.tsv"), &da).unwrap();
        assert_eq!(read_da_segments(&d.join("da.tsv")).unwrap(), da);

        let scored = vec![ScoredPair {
            lang_pair: "aa-bb".into(),
            seg_id: "1".into(),
            sys_better: "x".into(),
            sys_worse: "y".into(),
            score_better: 0.75,
            score_worse: 0.125,
        }];
        write_pair_scores(&d.join("ps.tsv"), &scored).unwrap();
        assert_eq!(read_pair_scores(&d.join("ps.tsv")).unwrap(), scored);

        let report = EvalReport {
            rows: vec![ReportRow {
                lang_pair: "aa-bb".into(),
                slice: "all".into(),
                pairs: 4,
                concordant: 3,
                discordant: 1,
                tau: 0.5,
            }],
        };
        write_report(&d.join("rep.tsv"), &report).unwrap();
        assert_eq!(read_report(&d.join("rep.tsv")).unwrap(), report);

        let ablation = vec![crate::ablation::AblationRow {
            lang_pair: "aa-bb".into(),
            pairs: 9,
            tau_ref_only: 0.25,
            tau_full: 0.75,
            delta_tau: 0.5,
        }];
        write_ablation_report(&d.join("ab.tsv"), &ablation).unwrap();
        assert_eq!(read_ablation_report(&d.join("ab.tsv")).unwrap(), ablation);

        // second write of freshly read data is byte-identical
        let first = std::fs::read(d.join("ps.tsv")).unwrap();
        let reread = read_pair_scores(&d.join("ps.tsv")).unwrap();
        write_pair_scores(&d.join("ps2.tsv"), &reread).unwrap();
        assert_eq!(first, std::fs::read(d.join("ps2.tsv")).unwrap());
    }

    #[test]
    fn fields_with_tabs_are_rejected_on_write() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("out.tsv");
        let tuples = vec![EvalTuple {
            source: "has\ttab".into(),
            hypothesis: "h".into(),
            reference: "r".into(),
            score: 0.0,
        }];
        assert!(matches!(
            write_eval_tuples(&path, &tuples),
            Err(Error::Invalid(_))
        ));
    }
}
