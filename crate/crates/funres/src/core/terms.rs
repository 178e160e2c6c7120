//! Model terms and design matrix construction.
//!
//! A `TermSet` is an ordered list of intercept, linear, power,
//! interaction, and regression-spline terms. Spline terms expand to a
//! B-spline basis of the declared degree with interior knots at equally
//! spaced quantiles of the column; the leading basis function is dropped
//! so spline blocks stay identifiable next to an intercept or cutpoints.

use crate::core::dataset::Dataset;
use crate::core::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Intercept,
    Linear(String),
    Power(String, u32),
    Interaction(String, String),
    Spline {
        col: String,
        degree: u32,
        num_knots: u32,
    },
}

impl Term {
    fn validate(&self, data: &Dataset) -> Result<()> {
        match self {
            Term::Intercept => Ok(()),
            Term::Linear(c) => data.column(c).map(|_| ()),
            Term::Power(c, k) => {
                if *k < 2 {
                    return Err(Error::InvalidTerm(format!(
                        "power({c}, {k}): exponent must be at least 2"
                    )));
                }
                data.column(c).map(|_| ())
            }
            Term::Interaction(a, b) => {
                data.column(a)?;
                data.column(b).map(|_| ())
            }
            Term::Spline {
                col,
                degree,
                num_knots,
            } => {
                if *num_knots < 1 {
                    return Err(Error::InvalidTerm(format!(
                        "spline({col}): needs at least one interior knot"
                    )));
                }
                if *degree < 1 {
                    return Err(Error::InvalidTerm(format!(
                        "spline({col}): degree must be at least 1"
                    )));
                }
                data.column(col).map(|_| ())
            }
        }
    }

    fn label(&self) -> String {
        match self {
            Term::Intercept => "(intercept)".into(),
            Term::Linear(c) => c.clone(),
            Term::Power(c, k) => format!("{c}^{k}"),
            Term::Interaction(a, b) => format!("{a}:{b}"),
            Term::Spline {
                col,
                degree,
                num_knots,
            } => {
                format!("spline({col},{degree},{num_knots})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermSet {
    terms: Vec<Term>,
}

impl TermSet {
    pub fn new(terms: Vec<Term>) -> Self {
        TermSet { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_intercept(&self) -> bool {
        self.terms.iter().any(|t| matches!(t, Term::Intercept))
    }

    pub fn push(&mut self, term: Term) {
        self.terms.push(term);
    }

    pub fn with(&self, term: Term) -> TermSet {
        let mut t = self.clone();
        t.push(term);
        t
    }

    /// Shorthand for a list of plain linear terms.
    pub fn linear(cols: &[&str]) -> TermSet {
        TermSet::new(cols.iter().map(|c| Term::Linear(c.to_string())).collect())
    }

    pub fn validate(&self, data: &Dataset) -> Result<()> {
        for t in &self.terms {
            t.validate(data)?;
        }
        Ok(())
    }

    /// Column labels of the expanded design, in design order.
    pub fn column_labels(&self, data: &Dataset) -> Result<Vec<String>> {
        Ok(CompiledTerms::compile(self, data)?.labels().to_vec())
    }

    /// Expand the terms against `data` into an n x q design matrix.
    pub fn design_matrix(&self, data: &Dataset) -> Result<Matrix> {
        CompiledTerms::compile(self, data)?.matrix(data)
    }

    /// Parse `"x1 + x2^2 + a:b + spline(h,3,7) + 1"`.
    pub fn parse(formula: &str) -> Result<TermSet> {
        let mut terms = Vec::new();
        for piece in formula.split('+') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            if piece == "1" {
                terms.push(Term::Intercept);
            } else if let Some(rest) = piece.strip_prefix("spline(") {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::InvalidTerm(format!("unclosed spline term `{piece}`")))?;
                let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(Error::InvalidTerm(format!(
                        "spline takes (column, degree, num_knots): `{piece}`"
                    )));
                }
                let degree: u32 = parts[1]
                    .parse()
                    .map_err(|_| Error::InvalidTerm(format!("bad spline degree in `{piece}`")))?;
                let num_knots: u32 = parts[2].parse().map_err(|_| {
                    Error::InvalidTerm(format!("bad spline knot count in `{piece}`"))
                })?;
                terms.push(Term::Spline {
                    col: parts[0].to_string(),
                    degree,
                    num_knots,
                });
            } else if let Some((a, b)) = piece.split_once(':') {
                terms.push(Term::Interaction(
                    a.trim().to_string(),
                    b.trim().to_string(),
                ));
            } else if let Some((c, k)) = piece.split_once('^') {
                let k: u32 = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidTerm(format!("bad exponent in `{piece}`")))?;
                terms.push(Term::Power(c.trim().to_string(), k));
            } else {
                terms.push(Term::Linear(piece.to_string()));
            }
        }
        if terms.is_empty() {
            return Err(Error::InvalidTerm("empty formula".into()));
        }
        Ok(TermSet::new(terms))
    }
}

/// A term set resolved against a dataset's column layout. Spline knots
/// are frozen at compile time, so a compiled set can evaluate design rows
/// for new covariate vectors (ordered like the source dataset's columns)
/// long after the fit.
#[derive(Debug, Clone)]
pub struct CompiledTerms {
    source_names: Vec<String>,
    cols: Vec<DesignCol>,
    labels: Vec<String>,
}

#[derive(Debug, Clone)]
enum DesignCol {
    Intercept,
    Linear(usize),
    Power(usize, i32),
    Interaction(usize, usize),
    Spline {
        col: usize,
        basis: SplineBasis,
        j: usize,
    },
}

impl CompiledTerms {
    pub fn compile(terms: &TermSet, data: &Dataset) -> Result<CompiledTerms> {
        terms.validate(data)?;
        let names: Vec<String> = data.names().to_vec();
        let idx = |c: &str| -> Result<usize> {
            names
                .iter()
                .position(|n| n == c)
                .ok_or_else(|| Error::UnknownColumn(c.to_string()))
        };
        let mut cols = Vec::new();
        let mut labels = Vec::new();
        for t in terms.terms() {
            match t {
                Term::Intercept => {
                    cols.push(DesignCol::Intercept);
                    labels.push(t.label());
                }
                Term::Linear(c) => {
                    cols.push(DesignCol::Linear(idx(c)?));
                    labels.push(t.label());
                }
                Term::Power(c, k) => {
                    cols.push(DesignCol::Power(idx(c)?, *k as i32));
                    labels.push(t.label());
                }
                Term::Interaction(a, b) => {
                    cols.push(DesignCol::Interaction(idx(a)?, idx(b)?));
                    labels.push(t.label());
                }
                Term::Spline {
                    col,
                    degree,
                    num_knots,
                } => {
                    let basis = SplineBasis::from_column(data.column(col)?, *degree, *num_knots)?;
                    let ci = idx(col)?;
                    for j in 0..basis.n_columns() {
                        cols.push(DesignCol::Spline {
                            col: ci,
                            basis: basis.clone(),
                            j,
                        });
                        labels.push(format!("{}[{}]", t.label(), j + 1));
                    }
                }
            }
        }
        Ok(CompiledTerms {
            source_names: names,
            cols,
            labels,
        })
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn source_names(&self) -> &[String] {
        &self.source_names
    }

    /// Design row for a covariate vector ordered like the source columns.
    pub fn eval_row(&self, x: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.source_names.len());
        out.clear();
        for c in &self.cols {
            out.push(match c {
                DesignCol::Intercept => 1.0,
                DesignCol::Linear(i) => x[*i],
                DesignCol::Power(i, k) => x[*i].powi(*k),
                DesignCol::Interaction(a, b) => x[*a] * x[*b],
                DesignCol::Spline { col, basis, j } => basis.eval(x[*col], *j),
            });
        }
    }

    /// Expand against a dataset whose column layout matches the compile
    /// source.
    pub fn matrix(&self, data: &Dataset) -> Result<Matrix> {
        if data.names() != self.source_names.as_slice() {
            return Err(Error::InvalidData(
                "dataset columns do not match the compiled term layout".into(),
            ));
        }
        let n = data.n();
        let q = self.n_cols();
        let mut m = Matrix::zeros(n, q);
        let mut row = Vec::with_capacity(q);
        for i in 0..n {
            let x = data.covariate_row(i);
            self.eval_row(&x, &mut row);
            for j in 0..q {
                m[(i, j)] = row[j];
            }
        }
        Ok(m)
    }
}

/// Clamped B-spline basis with interior knots at equally spaced quantiles.
/// The first basis function is omitted from the design.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    degree: usize,
    /// Full knot vector with repeated boundary knots.
    knots: Vec<f64>,
    n_basis: usize,
}

impl SplineBasis {
    pub fn from_column(x: &[f64], degree: u32, num_knots: u32) -> Result<SplineBasis> {
        let degree = degree as usize;
        let m = num_knots as usize;
        let mut sorted: Vec<f64> = x.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        if lo == hi {
            return Err(Error::InvalidTerm(
                "spline column is constant; knots cannot be strictly increasing".into(),
            ));
        }
        let mut interior = Vec::with_capacity(m);
        for i in 1..=m {
            interior.push(quantile_type7(&sorted, i as f64 / (m + 1) as f64));
        }
        for w in interior.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidTerm(format!(
                    "spline knots are not strictly increasing ({} then {}); reduce num_knots",
                    w[0], w[1]
                )));
            }
        }
        if interior.first().is_some_and(|&k| k <= lo) || interior.last().is_some_and(|&k| k >= hi) {
            return Err(Error::InvalidTerm(
                "spline interior knots collide with the column range".into(),
            ));
        }
        let mut knots = Vec::with_capacity(2 * (degree + 1) + m);
        knots.extend(std::iter::repeat_n(lo, degree + 1));
        knots.extend(interior.iter().copied());
        knots.extend(std::iter::repeat_n(hi, degree + 1));
        let n_basis = m + degree + 1;
        Ok(SplineBasis {
            degree,
            knots,
            n_basis,
        })
    }

    /// Number of design columns (basis functions minus the dropped one).
    pub fn n_columns(&self) -> usize {
        self.n_basis - 1
    }

    /// Value of dropped-basis column `j` (0-based) at `v`; inputs are
    /// clamped to the knot range.
    pub fn eval(&self, v: f64, j: usize) -> f64 {
        self.basis_value(v, j + 1)
    }

    fn basis_value(&self, v: f64, idx: usize) -> f64 {
        let d = self.degree;
        let lo = self.knots[0];
        let hi = self.knots[self.knots.len() - 1];
        let v = v.clamp(lo, hi);
        // Cox-de Boor over the degree-0 seed.
        let n_knots = self.knots.len();
        let mut b = vec![0.0; n_knots - 1];
        for (i, slot) in b.iter_mut().enumerate() {
            let t0 = self.knots[i];
            let t1 = self.knots[i + 1];
            let in_span = if t1 >= hi {
                v >= t0 && v <= t1 && t1 > t0
            } else {
                v >= t0 && v < t1
            };
            *slot = if in_span { 1.0 } else { 0.0 };
        }
        for k in 1..=d {
            for i in 0..(n_knots - k - 1) {
                let t_i = self.knots[i];
                let t_ik = self.knots[i + k];
                let t_i1 = self.knots[i + 1];
                let t_ik1 = self.knots[i + k + 1];
                let left = if t_ik > t_i {
                    (v - t_i) / (t_ik - t_i) * b[i]
                } else {
                    0.0
                };
                let right = if t_ik1 > t_i1 {
                    (t_ik1 - v) / (t_ik1 - t_i1) * b[i + 1]
                } else {
                    0.0
                };
                b[i] = left + right;
            }
        }
        b[idx]
    }
}

/// Linear-interpolation quantile of a pre-sorted slice (R type 7).
fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(cols: Vec<(&str, Vec<f64>)>) -> Dataset {
        let n = cols[0].1.len();
        let names = cols.iter().map(|(n, _)| n.to_string()).collect();
        let columns = cols.into_iter().map(|(_, c)| c).collect();
        Dataset::new(vec![0; n], columns, names).unwrap()
    }

    #[test]
    fn polynomial_rows() {
        let d = data(vec![("x", vec![1.0])]);
        let terms = TermSet::new(vec![
            Term::Intercept,
            Term::Linear("x".into()),
            Term::Power("x".into(), 2),
        ]);
        let m = terms.design_matrix(&d).unwrap();
        assert_eq!(m.row(0), &[1.0, 1.0, 1.0]);

        let d = data(vec![("x", vec![2.0])]);
        let terms = TermSet::new(vec![Term::Linear("x".into()), Term::Power("x".into(), 2)]);
        let m = terms.design_matrix(&d).unwrap();
        assert_eq!(m.row(0), &[2.0, 4.0]);
    }

    #[test]
    fn interaction_row() {
        let d = data(vec![("x1", vec![3.0]), ("x2", vec![-1.0])]);
        let terms = TermSet::new(vec![Term::Interaction("x1".into(), "x2".into())]);
        let m = terms.design_matrix(&d).unwrap();
        assert_eq!(m.row(0), &[-3.0]);
    }

    #[test]
    fn errors_for_bad_terms() {
        let d = data(vec![("x", vec![1.0, 2.0])]);
        assert!(matches!(
            TermSet::new(vec![Term::Linear("z".into())]).design_matrix(&d),
            Err(Error::UnknownColumn(_))
        ));
        assert!(matches!(
            TermSet::new(vec![Term::Power("x".into(), 1)]).design_matrix(&d),
            Err(Error::InvalidTerm(_))
        ));
        assert!(matches!(
            TermSet::new(vec![Term::Spline {
                col: "x".into(),
                degree: 3,
                num_knots: 0
            }])
            .design_matrix(&d),
            Err(Error::InvalidTerm(_))
        ));
    }

    #[test]
    fn design_is_permutation_equivariant() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let z: Vec<f64> = (0..40).map(|i| (i as f64 * 0.11).cos()).collect();
        let d = data(vec![("x", x.clone()), ("z", z.clone())]);
        let terms = TermSet::new(vec![
            Term::Intercept,
            Term::Linear("x".into()),
            Term::Power("x".into(), 3),
            Term::Interaction("x".into(), "z".into()),
            Term::Spline {
                col: "x".into(),
                degree: 3,
                num_knots: 4,
            },
        ]);
        let m = terms.design_matrix(&d).unwrap();

        // reverse the rows
        let xr: Vec<f64> = x.iter().rev().copied().collect();
        let zr: Vec<f64> = z.iter().rev().copied().collect();
        let dr = data(vec![("x", xr), ("z", zr)]);
        let mr = terms.design_matrix(&dr).unwrap();
        for i in 0..40 {
            for j in 0..m.cols() {
                assert!((m[(i, j)] - mr[(39 - i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spline_partition_of_unity() {
        let x: Vec<f64> = (0..200).map(|i| -2.0 + i as f64 * 0.02).collect();
        let basis = SplineBasis::from_column(&x, 3, 5).unwrap();
        // full basis sums to one; the design drops column 0, so the sum of
        // retained columns is 1 - B_0(v)
        for &v in &[-2.0, -1.3, 0.0, 0.71, 1.9, 1.98] {
            let dropped = basis.basis_value(v, 0);
            let total: f64 = (0..basis.n_columns()).map(|j| basis.eval(v, j)).sum();
            assert!(
                (total + dropped - 1.0).abs() < 1e-10,
                "partition of unity failed at {v}: {total} + {dropped}"
            );
        }
    }

    #[test]
    fn spline_rejects_constant_column() {
        let x = vec![2.0; 30];
        assert!(SplineBasis::from_column(&x, 3, 3).is_err());
    }

    #[test]
    fn spline_rejects_tied_quantiles() {
        let mut x = vec![0.0; 50];
        x.extend(vec![1.0; 50]);
        assert!(SplineBasis::from_column(&x, 3, 5).is_err());
    }

    #[test]
    fn parse_formula() {
        let t = TermSet::parse("1 + x + x^2 + a:b + spline(h, 3, 7)").unwrap();
        assert_eq!(
            t.terms(),
            &[
                Term::Intercept,
                Term::Linear("x".into()),
                Term::Power("x".into(), 2),
                Term::Interaction("a".into(), "b".into()),
                Term::Spline {
                    col: "h".into(),
                    degree: 3,
                    num_knots: 7
                },
            ]
        );
        assert!(TermSet::parse("").is_err());
        assert!(TermSet::parse("spline(x,3)").is_err());
    }
}
