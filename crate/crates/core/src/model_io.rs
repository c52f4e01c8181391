//! Versioned text serialization of fitted models.
//!
//! Every file starts with `deplda-model 1` followed by a `kind` line
//! (`global`, `local`, or `lda`), dimension lines, and named numeric
//! blocks. Matrices are written row-major. Numbers use the shortest
//! round-trip encoding, so `load(save(m))` reproduces `m` bit-exactly.
//!
//! A global-model file may carry an optional `lda` section so that one
//! file describes the whole front-end a scorer needs.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::local::{EpochStats, LocalModel, TrainHistory};
use crate::numeric::format_f64;
use crate::plda::GlobalModel;
use crate::preprocess::LdaTransform;

const FORMAT_NAME: &str = "deplda-model";
const FORMAT_VERSION: &str = "1";

struct TokenReader<'a> {
    tokens: std::str::SplitWhitespace<'a>,
    path: String,
}

impl<'a> TokenReader<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        TokenReader {
            tokens: text.split_whitespace(),
            path: path.display().to_string(),
        }
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Invalid(format!("{}: {}", self.path, message.into()))
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        self.tokens
            .next()
            .ok_or_else(|| self.fail(format!("unexpected end of file, expected {what}")))
    }

    fn expect(&mut self, keyword: &str) -> Result<()> {
        let tok = self.next(keyword)?;
        if tok != keyword {
            return Err(self.fail(format!("expected '{keyword}', found '{tok}'")));
        }
        Ok(())
    }

    fn next_usize(&mut self, what: &str) -> Result<usize> {
        let tok = self.next(what)?;
        tok.parse()
            .map_err(|_| self.fail(format!("invalid {what} '{tok}'")))
    }

    fn next_f64(&mut self, what: &str) -> Result<f64> {
        let tok = self.next(what)?;
        tok.parse()
            .map_err(|_| self.fail(format!("invalid {what} '{tok}'")))
    }

    fn block(&mut self, name: &str, len: usize) -> Result<Vec<f64>> {
        self.expect(name)?;
        let declared = self.next_usize(&format!("{name} length"))?;
        if declared != len {
            return Err(self.fail(format!(
                "{name} block declares {declared} values, expected {len}"
            )));
        }
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(self.next_f64(&format!("{name} value"))?);
        }
        Ok(values)
    }

    fn header(&mut self, kind: &str) -> Result<()> {
        self.expect(FORMAT_NAME)?;
        let version = self.next("format version")?;
        if version != FORMAT_VERSION {
            return Err(self.fail(format!(
                "unsupported format version '{version}', expected '{FORMAT_VERSION}'"
            )));
        }
        self.expect("kind")?;
        let found = self.next("model kind")?;
        if found != kind {
            return Err(self.fail(format!("expected a {kind} model, found '{found}'")));
        }
        Ok(())
    }

    fn at_end(&mut self) -> bool {
        self.tokens.clone().next().is_none()
    }
}

fn push_block(out: &mut String, name: &str, values: impl Iterator<Item = f64>, per_line: usize) {
    let values: Vec<f64> = values.collect();
    out.push_str(&format!("{name} {}\n", values.len()));
    for chunk in values.chunks(per_line.max(1)) {
        let line: Vec<String> = chunk.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

fn push_lda_section(out: &mut String, lda: &LdaTransform) {
    out.push_str(&format!("lda {} {}\n", lda.dim_out, lda.dim_in));
    push_block(out, "lda_mean", lda.mean.iter().copied(), lda.dim_in);
    push_block(
        out,
        "lda_projection",
        row_major(&lda.projection),
        lda.dim_in,
    );
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

fn read_lda_section(reader: &mut TokenReader) -> Result<LdaTransform> {
    let dim_out = reader.next_usize("lda output dimension")?;
    let dim_in = reader.next_usize("lda input dimension")?;
    if dim_out == 0 || dim_in == 0 || dim_out > dim_in {
        return Err(reader.fail(format!("inconsistent lda dimensions {dim_out}x{dim_in}")));
    }
    let mean = reader.block("lda_mean", dim_in)?;
    let projection = reader.block("lda_projection", dim_out * dim_in)?;
    Ok(LdaTransform {
        dim_in,
        dim_out,
        projection: DMatrix::from_row_slice(dim_out, dim_in, &projection),
        mean,
    })
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Saves a global model, optionally with the LDA front-end it was trained
/// behind.
pub fn save_global(
    path: impl AsRef<Path>,
    model: &GlobalModel,
    lda: Option<&LdaTransform>,
) -> Result<()> {
    let d = model.dim;
    let mut out = format!("{FORMAT_NAME} {FORMAT_VERSION}\nkind global\ndim {d}\n");
    push_block(&mut out, "mean", model.mean.iter().copied(), d);
    push_block(&mut out, "w", row_major(&model.w), d);
    push_block(&mut out, "epsilon", model.epsilon.iter().copied(), d);
    if let Some(lda) = lda {
        push_lda_section(&mut out, lda);
    }
    write_file(path.as_ref(), &out)
}

/// Loads a global model and its optional LDA front-end.
pub fn load_global(path: impl AsRef<Path>) -> Result<(GlobalModel, Option<LdaTransform>)> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let mut reader = TokenReader::new(&text, path);
    reader.header("global")?;
    reader.expect("dim")?;
    let d = reader.next_usize("dimension")?;
    if d == 0 {
        return Err(reader.fail("dimension must be at least 1"));
    }
    let mean = reader.block("mean", d)?;
    let w = reader.block("w", d * d)?;
    let epsilon = reader.block("epsilon", d)?;
    let mut lda = None;
    if !reader.at_end() {
        reader.expect("lda")?;
        let transform = read_lda_section(&mut reader)?;
        if transform.dim_out != d {
            return Err(reader.fail(format!(
                "lda output dimension {} does not match model dimension {d}",
                transform.dim_out
            )));
        }
        lda = Some(transform);
    }
    if !reader.at_end() {
        return Err(reader.fail("trailing content after model"));
    }
    Ok((
        GlobalModel {
            dim: d,
            mean,
            w: DMatrix::from_row_slice(d, d, &w),
            epsilon,
        },
        lda,
    ))
}

/// Saves a local model together with its training history.
pub fn save_local(
    path: impl AsRef<Path>,
    model: &LocalModel,
    history: &TrainHistory,
) -> Result<()> {
    let d = model.dim;
    let mut out = format!("{FORMAT_NAME} {FORMAT_VERSION}\nkind local\ndim {d}\n");
    push_block(&mut out, "m_diag", model.m_diag.iter().copied(), d);
    out.push_str(&format!("best_epoch {}\n", model.best_epoch));
    out.push_str(&format!(
        "monitor_eer {}\n",
        format_f64(model.monitor_eer_at_best)
    ));
    out.push_str(&format!("history {}\n", history.epochs.len()));
    for e in &history.epochs {
        out.push_str(&format!(
            "{} {} {}\n",
            e.epoch,
            format_f64(e.objective),
            format_f64(e.monitor_eer)
        ));
    }
    write_file(path.as_ref(), &out)
}

/// Loads a local model and its training history.
pub fn load_local(path: impl AsRef<Path>) -> Result<(LocalModel, TrainHistory)> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let mut reader = TokenReader::new(&text, path);
    reader.header("local")?;
    reader.expect("dim")?;
    let d = reader.next_usize("dimension")?;
    if d == 0 {
        return Err(reader.fail("dimension must be at least 1"));
    }
    let m_diag = reader.block("m_diag", d)?;
    reader.expect("best_epoch")?;
    let best_epoch = reader.next_usize("best epoch")?;
    reader.expect("monitor_eer")?;
    let monitor_eer_at_best = reader.next_f64("monitor eer")?;
    reader.expect("history")?;
    let rows = reader.next_usize("history length")?;
    let mut history = TrainHistory::default();
    for _ in 0..rows {
        let epoch = reader.next_usize("history epoch")?;
        let objective = reader.next_f64("history objective")?;
        let monitor_eer = reader.next_f64("history eer")?;
        history.epochs.push(EpochStats {
            epoch,
            objective,
            monitor_eer,
        });
    }
    if !reader.at_end() {
        return Err(reader.fail("trailing content after model"));
    }
    Ok((
        LocalModel {
            dim: d,
            m_diag,
            best_epoch,
            monitor_eer_at_best,
        },
        history,
    ))
}

/// Saves a standalone LDA transform.
pub fn save_lda(path: impl AsRef<Path>, lda: &LdaTransform) -> Result<()> {
    let mut out = format!("{FORMAT_NAME} {FORMAT_VERSION}\nkind lda\n");
    push_lda_section(&mut out, lda);
    write_file(path.as_ref(), &out)
}

/// Loads a standalone LDA transform.
pub fn load_lda(path: impl AsRef<Path>) -> Result<LdaTransform> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let mut reader = TokenReader::new(&text, path);
    reader.header("lda")?;
    reader.expect("lda")?;
    let lda = read_lda_section(&mut reader)?;
    if !reader.at_end() {
        return Err(reader.fail("trailing content after model"));
    }
    Ok(lda)
}
