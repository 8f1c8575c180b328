//! Binary serialization of fields and forms.
//!
//! Layout: the coefficient fields of a form are concatenated in monomial
//! order; each field is written row-major (lexicographic grid index) as
//! complex pairs of little-endian 64-bit floats. A JSON sidecar
//! `<file>.json` records the resolution and bidegree. All writes are atomic
//! (same-directory temp file renamed into place).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::exterior;
use crate::forms::BaseForm;
use crate::grid::{PeriodicGrid, ScalarField};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSidecar {
    pub n: usize,
    pub bidegree: [u8; 2],
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

/// Write `bytes` to `path` atomically: write a temp file in the same
/// directory, flush, then rename over the destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let name = path
        .file_name()
        .ok_or_else(|| PipelineError::Config(format!("bad output path {}", path.display())))?;
    let tmp_name = format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id());
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => PathBuf::from(&tmp_name),
    };
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize `value` as pretty JSON with a trailing newline, atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

/// Write a form's binary payload plus its JSON sidecar.
pub fn write_form(path: &Path, form: &BaseForm) -> Result<(), PipelineError> {
    let (p, q) = form.bidegree();
    let n = form.grid().n();
    let mut bytes = Vec::with_capacity(form.components().len() * form.grid().points() * 16);
    for comp in form.components() {
        for z in comp.data() {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    atomic_write(path, &bytes)?;
    write_json(&sidecar_path(path), &FieldSidecar { n, bidegree: [p, q] })
}

/// Write a scalar field as a (0,0)-form.
pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<(), PipelineError> {
    write_form(path, &BaseForm::scalar(f.clone()))
}

/// Read a form written by [`write_form`], validating the payload length
/// against the sidecar.
pub fn read_form(path: &Path) -> Result<BaseForm, PipelineError> {
    let sidecar: FieldSidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let [p, q] = sidecar.bidegree;
    if p > 2 || q > 2 {
        return Err(PipelineError::Config(format!(
            "bidegree ({p},{q}) out of range in {}",
            sidecar_path(path).display()
        )));
    }
    let grid = PeriodicGrid::new(sidecar.n)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    let bytes = fs::read(path)?;
    let ncomp = exterior::dim(p, q);
    let expected = ncomp * grid.points() * 16;
    if bytes.len() != expected {
        return Err(PipelineError::Config(format!(
            "{}: expected {expected} bytes for n = {}, bidegree ({p},{q}); found {}",
            path.display(),
            sidecar.n,
            bytes.len()
        )));
    }
    let mut comps = Vec::with_capacity(ncomp);
    for c in 0..ncomp {
        let base = c * grid.points() * 16;
        let data: Vec<Complex64> = (0..grid.points())
            .map(|i| {
                let o = base + i * 16;
                Complex64::new(
                    f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()),
                    f64::from_le_bytes(bytes[o + 8..o + 16].try_into().unwrap()),
                )
            })
            .collect();
        comps.push(ScalarField::from_data(grid, data));
    }
    Ok(BaseForm::from_components(grid, p, q, comps))
}

/// Read a scalar field written by [`write_scalar`].
pub fn read_scalar(path: &Path) -> Result<ScalarField, PipelineError> {
    let form = read_form(path)?;
    form.expect_bidegree(0, 0).map_err(PipelineError::Field)?;
    Ok(form.components()[0].clone())
}
