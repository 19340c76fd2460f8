//! JSON wire formats for scalars, series, and modules.
//!
//! A series travels as `{"n", "m", "N", "window", "terms"}` with terms in
//! canonical form: sorted lexicographically by exponent, each carrying its
//! exponent vector, coefficient valuation, and unit part as a decimal
//! string. A module is `{"d", "f", "A", "G", "params"}`. Coefficients are
//! certified modulo p^N by the format's contract, so the per-term relative
//! precision is `N − v` on both sides of a round trip.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{KernelError, Result};
use crate::matrix::SeriesMatrix;
use crate::scalar::{GlobalParams, PadicScalar};
use crate::series::{Exponent, Series, VarSpec, Window, WIN_INF};
use crate::sigma_nabla::SigmaNablaModule;

/// A bare scalar as `{"v": int, "u": decimal-string, "R": int}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ScalarRepr {
    pub v: i64,
    pub u: String,
    #[serde(rename = "R")]
    pub r: i64,
}

impl From<&PadicScalar> for ScalarRepr {
    fn from(c: &PadicScalar) -> Self {
        ScalarRepr {
            v: c.v,
            u: c.u.to_string(),
            r: c.r,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TermRepr {
    pub e: Vec<i64>,
    pub v: i64,
    pub u: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SeriesRepr {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub prec: i64,
    pub window: Vec<[i64; 2]>,
    pub terms: Vec<TermRepr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleRepr {
    pub d: usize,
    pub f: u32,
    #[serde(rename = "A")]
    pub a: Vec<Vec<SeriesRepr>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<Vec<SeriesRepr>>>,
    pub params: GlobalParams,
}

impl From<&Series> for SeriesRepr {
    fn from(s: &Series) -> Self {
        let window = s
            .window
            .bounds()
            .iter()
            .map(|&(lo, hi)| [lo, hi])
            .collect();
        let terms = s
            .terms()
            .iter()
            .map(|(e, c)| TermRepr {
                e: e.clone(),
                v: c.v,
                u: c.u.to_string(),
            })
            .collect();
        SeriesRepr {
            n: s.vars.torus,
            m: s.vars.affine,
            prec: s.prec,
            window,
            terms,
        }
    }
}

impl SeriesRepr {
    /// Rebuild over the given prime; the wire format does not carry p.
    pub fn to_series(&self, p: u64) -> Result<Series> {
        let vars = VarSpec::new(self.n, self.m);
        let bounds = self.window.iter().map(|&[lo, hi]| (lo, hi)).collect();
        let window = Window::from_bounds(vars, bounds)?;
        let mut terms: BTreeMap<Exponent, PadicScalar> = BTreeMap::new();
        for t in &self.terms {
            if t.e.len() != vars.total() {
                return Err(KernelError::BadInput {
                    context: format!(
                        "term exponent {:?} has wrong arity for {} variables",
                        t.e,
                        vars.total()
                    ),
                });
            }
            let u: u128 = t.u.parse().map_err(|_| KernelError::BadInput {
                context: format!("unit part {:?} is not a decimal integer", t.u),
            })?;
            let r = self.prec - t.v;
            if u == 0 || r <= 0 {
                continue;
            }
            if u % p as u128 == 0 {
                return Err(KernelError::BadInput {
                    context: format!("unit part {u} at exponent {:?} is divisible by p = {p}", t.e),
                });
            }
            let c = PadicScalar { p, v: t.v, u, r };
            if terms.insert(t.e.clone(), c).is_some() {
                return Err(KernelError::BadInput {
                    context: format!("duplicate term at exponent {:?}", t.e),
                });
            }
        }
        // outside the stated window nothing is certified beyond the
        // working precision
        let tail = if window.is_full(vars) { WIN_INF } else { self.prec };
        Series::from_parts(p, vars, self.prec, window, tail, terms)
    }
}

impl From<&SigmaNablaModule> for ModuleRepr {
    fn from(m: &SigmaNablaModule) -> Self {
        let row_of = |mat: &SeriesMatrix| -> Vec<Vec<SeriesRepr>> {
            (0..mat.rows)
                .map(|i| (0..mat.cols).map(|j| SeriesRepr::from(mat.at(i, j))).collect())
                .collect()
        };
        ModuleRepr {
            d: m.rank(),
            f: m.f,
            a: row_of(&m.a),
            g: m.g.iter().map(&row_of).collect(),
        params: m.params,
        }
    }
}

impl TryFrom<&ModuleRepr> for SigmaNablaModule {
    type Error = KernelError;

    fn try_from(w: &ModuleRepr) -> Result<Self> {
        let p = w.params.p;
        let to_matrix = |rows: &Vec<Vec<SeriesRepr>>| -> Result<SeriesMatrix> {
            let data = rows
                .iter()
                .map(|row| row.iter().map(|s| s.to_series(p)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            if data.is_empty() || data.iter().any(|r| r.len() != data.len()) {
                return Err(KernelError::BadInput {
                    context: "matrix blocks must be square and nonempty".into(),
                });
            }
            Ok(SeriesMatrix::from_rows(data))
        };
        let a = to_matrix(&w.a)?;
        if a.rows != w.d {
            return Err(KernelError::BadInput {
                context: format!("matrix is {}×{} but d = {}", a.rows, a.cols, w.d),
            });
        }
        let g = w.g.iter().map(to_matrix).collect::<Result<Vec<_>>>()?;
        SigmaNablaModule::new(w.params, w.f, a, g)
    }
}

/// Canonical JSON text: pretty-printed with a trailing newline, so equal
/// reports are equal bytes.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_module(path: &Path) -> Result<SigmaNablaModule> {
    let text = fs::read_to_string(path)?;
    let wire: ModuleRepr = serde_json::from_str(&text)?;
    SigmaNablaModule::try_from(&wire)
}

pub fn write_module(path: &Path, module: &SigmaNablaModule) -> Result<()> {
    write_json(path, &ModuleRepr::from(module))
}
