use std::fmt;

use num_traits::Signed;
use thiserror::Error;

use crate::exact::Rational;

use super::coeff::RationalCoefficient;

/// Total-degree ceiling used when no explicit guard is given.
pub const DEFAULT_DEGREE_GUARD: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("fields live on different spaces ({0} vs {1} coordinates)")]
    DimensionMismatch(String, String),
    #[error("point coordinate {index} = {value} is not strictly positive")]
    Domain { index: usize, value: String },
    #[error("point has {got} coordinates, expected {expected}")]
    PointLength { got: usize, expected: usize },
    #[error("bracket degree {degree} exceeds guard {guard}")]
    DegreeGuard { degree: u32, guard: u32 },
}

/// A first-order operator `sum_j c_j(phi) d/dz_j`.
///
/// The first `nvars` directions are the phi coordinates, which are the only
/// variables coefficients may depend on. Extra directions (time, observation
/// coordinates) follow and are never differentiated, so their coordinates
/// cannot appear in any coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    nvars: usize,
    components: Vec<RationalCoefficient>,
    extra_axes: Vec<String>,
    label: String,
}

impl VectorField {
    pub fn new(components: Vec<RationalCoefficient>, label: impl Into<String>) -> Self {
        let nvars = components.first().map(RationalCoefficient::nvars).unwrap_or(0);
        assert!(components.iter().all(|c| c.nvars() == nvars));
        VectorField { nvars, components, extra_axes: Vec::new(), label: label.into() }
    }

    pub fn zero(nvars: usize, label: impl Into<String>) -> Self {
        Self::new(vec![RationalCoefficient::zero(nvars); nvars], label)
    }

    /// Appends non-phi directions with the given coefficients.
    pub fn with_extra_axes(mut self, axes: Vec<(String, RationalCoefficient)>) -> Self {
        for (name, c) in axes {
            assert_eq!(c.nvars(), self.nvars);
            self.extra_axes.push(name);
            self.components.push(c);
        }
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Ambient dimension: phi directions plus extra axes.
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn extra_axes(&self) -> &[String] {
        &self.extra_axes
    }

    pub fn components(&self) -> &[RationalCoefficient] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &RationalCoefficient {
        &self.components[j]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(RationalCoefficient::is_zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.components.iter().map(RationalCoefficient::total_degree).max().unwrap_or(0)
    }

    fn same_space(&self, other: &Self) -> Result<(), FieldError> {
        if self.nvars != other.nvars || self.dim() != other.dim() || self.extra_axes != other.extra_axes {
            return Err(FieldError::DimensionMismatch(self.shape(), other.shape()));
        }
        Ok(())
    }

    fn shape(&self) -> String {
        format!("{}+{:?}", self.nvars, self.extra_axes)
    }

    /// Directional derivative `F(g) = sum_j f_j d g / d phi_j`.
    pub fn apply(&self, g: &RationalCoefficient) -> RationalCoefficient {
        (0..self.nvars).fold(RationalCoefficient::zero(self.nvars), |acc, j| {
            if self.components[j].is_zero() {
                acc
            } else {
                &acc + &(&self.components[j] * &g.derivative(j))
            }
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_space(other)?;
        Ok(self.zip_with(other, |a, b| a + b, format!("{} + {}", self.label, other.label)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_space(other)?;
        Ok(self.zip_with(other, |a, b| a - b, format!("{} - {}", self.label, other.label)))
    }

    fn zip_with(
        &self,
        other: &Self,
        op: impl Fn(&RationalCoefficient, &RationalCoefficient) -> RationalCoefficient,
        label: String,
    ) -> Self {
        VectorField {
            nvars: self.nvars,
            components: self.components.iter().zip(&other.components).map(|(a, b)| op(a, b).normalized()).collect(),
            extra_axes: self.extra_axes.clone(),
            label,
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        VectorField {
            nvars: self.nvars,
            components: self.components.iter().map(|x| x.scale(c)).collect(),
            extra_axes: self.extra_axes.clone(),
            label: format!("({})*{}", crate::exact::format_rational(c), self.label),
        }
    }

    /// Multiplies every component by a scalar function.
    pub fn times(&self, g: &RationalCoefficient) -> Self {
        VectorField {
            nvars: self.nvars,
            components: self.components.iter().map(|x| x * g).collect(),
            extra_axes: self.extra_axes.clone(),
            label: format!("g*{}", self.label),
        }
    }

    fn check_point(&self, point: &[Rational]) -> Result<(), FieldError> {
        if point.len() != self.nvars {
            return Err(FieldError::PointLength { got: point.len(), expected: self.nvars });
        }
        if let Some((index, v)) = point.iter().enumerate().find(|(_, v)| !v.is_positive()) {
            return Err(FieldError::Domain { index, value: crate::exact::format_rational(v) });
        }
        Ok(())
    }

    /// Exact value at an interior point of the orthant.
    pub fn evaluate(&self, point: &[Rational]) -> Result<Vec<Rational>, FieldError> {
        self.check_point(point)?;
        Ok(self.components.iter().map(|c| c.eval(point)).collect())
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval_f64(point)).collect()
    }
}

/// `[F, G]_i = F(g_i) - G(f_i)`, differentiating only in phi.
pub fn lie_bracket(f: &VectorField, g: &VectorField) -> Result<VectorField, FieldError> {
    lie_bracket_guarded(f, g, u32::MAX)
}

/// Bracket that refuses results whose total degree exceeds `guard`.
pub fn lie_bracket_guarded(f: &VectorField, g: &VectorField, guard: u32) -> Result<VectorField, FieldError> {
    f.same_space(g)?;
    let components: Vec<RationalCoefficient> =
        f.components.iter().zip(&g.components).map(|(fi, gi)| (&f.apply(gi) - &g.apply(fi)).normalized()).collect();
    let out = VectorField {
        nvars: f.nvars,
        components,
        extra_axes: f.extra_axes.clone(),
        label: format!("[{},{}]", f.label, g.label),
    };
    let degree = out.total_degree();
    if degree > guard {
        return Err(FieldError::DegreeGuard { degree, guard });
    }
    Ok(out)
}

/// Equality as rational functions on the whole orthant.
pub fn fields_equal(f: &VectorField, g: &VectorField) -> bool {
    f.same_space(g).is_ok() && f.components.iter().zip(&g.components).all(|(a, b)| a.equals(b))
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (j, c) in self.components.iter().enumerate() {
            let terms = c.term_strings();
            if terms.is_empty() {
                continue;
            }
            let axis = if j < self.nvars {
                format!("d/dphi{}", j + 1)
            } else {
                format!("d/d{}", self.extra_axes[j - self.nvars])
            };
            if terms.len() == 1 {
                parts.push(format!("{} {axis}", terms[0]));
            } else {
                parts.push(format!("({}) {axis}", terms.join(" + ")));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}
