//! Forbidden-region families.
//!
//! A family assigns to every pair x != y the open region
//! S(x, y) = m + rho * R_u(S), where m is the midpoint, rho = |x - y|, u is
//! the pair direction, S is a template about the reference axis u0, and R_u
//! is the rotation taking u0 to u in their common plane while fixing its
//! orthogonal complement. Gabriel regions (open ball on the diameter) and
//! relative-neighborhood regions (open lens) get direct algebraic membership
//! tests; everything else goes through the template machinery.
//!
//! Membership uses exact floating-point comparisons, no epsilon. The
//! algebraic forms below are arranged so the two endpoints compare exactly
//! equal to the threshold and therefore never test inside; template families
//! get an explicit bitwise endpoint guard instead, because the rotation
//! round-trip can round either way.
//!
//! Each family carries two certified constants: `normalized_diameter` (a
//! bound D with |p - x|, |p - y| <= D * rho for every region point p) and
//! `ball_ratio` (a delta such that S(x, y) contains a ball of radius
//! delta * rho). `certify_constants` validates both by sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{PxgError, Result};
use crate::geom::{self, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Gabriel,
    RelativeNeighborhood,
    TemplateIsotropic,
}

/// Rotation taking a reference axis to a pair direction.
///
/// Planar form: rotate in span{p, q}, fix the orthogonal complement. `Flip`
/// covers the antiparallel case in dimension one, where the only orthogonal
/// map sending u0 to -u0 is the sign flip; templates are centrally
/// symmetric, so the missing orientation is immaterial there.
#[derive(Debug, Clone)]
pub enum Rotation {
    Identity,
    Flip,
    Planar {
        p: [f64; MAX_DIM],
        q: [f64; MAX_DIM],
        cos: f64,
        sin: f64,
        dim: usize,
    },
}

impl Rotation {
    pub fn apply_into(&self, src: &[f64], dst: &mut [f64]) {
        match self {
            Rotation::Identity => dst.copy_from_slice(src),
            Rotation::Flip => {
                for k in 0..src.len() {
                    dst[k] = -src[k];
                }
            }
            Rotation::Planar { p, q, cos, sin, dim } => {
                let a = geom::dot(&p[..*dim], src);
                let b = geom::dot(&q[..*dim], src);
                let ca = cos - 1.0;
                let cp = ca * a - sin * b;
                let cq = sin * a + ca * b;
                for k in 0..*dim {
                    dst[k] = src[k] + cp * p[k] + cq * q[k];
                }
            }
        }
    }

    pub fn apply_inverse_into(&self, src: &[f64], dst: &mut [f64]) {
        match self {
            Rotation::Identity => dst.copy_from_slice(src),
            Rotation::Flip => {
                for k in 0..src.len() {
                    dst[k] = -src[k];
                }
            }
            Rotation::Planar { p, q, cos, sin, dim } => {
                let a = geom::dot(&p[..*dim], src);
                let b = geom::dot(&q[..*dim], src);
                let ca = cos - 1.0;
                let cp = ca * a + sin * b;
                let cq = -sin * a + ca * b;
                for k in 0..*dim {
                    dst[k] = src[k] + cp * p[k] + cq * q[k];
                }
            }
        }
    }
}

/// Rotation mapping unit vector `u0` to unit vector `u` in their common
/// plane, fixing the orthogonal complement. For antiparallel inputs the
/// plane is spanned by u0 and the first standard basis vector not parallel
/// to it; in dimension one that degenerates to the sign flip.
pub fn rotation_to(u0: &[f64], u: &[f64]) -> Result<Rotation> {
    let dim = u0.len();
    if dim == 0 || dim > MAX_DIM {
        return Err(PxgError::invalid("rotation_to: dimension out of range"));
    }
    if u.len() != dim {
        return Err(PxgError::DimensionMismatch {
            expected: dim,
            got: u.len(),
        });
    }
    for (name, v) in [("u0", u0), ("u", u)] {
        if (geom::norm2(v) - 1.0).abs() > 1e-9 {
            return Err(PxgError::invalid(format!("rotation_to: {name} is not a unit vector")));
        }
    }
    let c = geom::dot(u0, u).clamp(-1.0, 1.0);
    let mut q = [0.0; MAX_DIM];
    let mut n2 = 0.0;
    for k in 0..dim {
        q[k] = u[k] - c * u0[k];
        n2 += q[k] * q[k];
    }
    if n2 < 1e-24 {
        if c > 0.0 {
            return Ok(Rotation::Identity);
        }
        if dim == 1 {
            return Ok(Rotation::Flip);
        }
        // Antiparallel: rotate by pi in span{u0, e}, e the first basis
        // vector not parallel to u0.
        let mut e = 0;
        while u0[e].abs() >= 1.0 - 1e-12 {
            e += 1;
        }
        let mut qq = [0.0; MAX_DIM];
        let mut m2 = 0.0;
        for k in 0..dim {
            qq[k] = (if k == e { 1.0 } else { 0.0 }) - u0[e] * u0[k];
            m2 += qq[k] * qq[k];
        }
        let inv = 1.0 / m2.sqrt();
        for v in qq.iter_mut().take(dim) {
            *v *= inv;
        }
        let mut p = [0.0; MAX_DIM];
        p[..dim].copy_from_slice(u0);
        return Ok(Rotation::Planar {
            p,
            q: qq,
            cos: -1.0,
            sin: 0.0,
            dim,
        });
    }
    let inv = 1.0 / n2.sqrt();
    let mut qn = [0.0; MAX_DIM];
    for k in 0..dim {
        qn[k] = q[k] * inv;
    }
    let mut p = [0.0; MAX_DIM];
    p[..dim].copy_from_slice(u0);
    let sin = (1.0 - c * c).max(0.0).sqrt();
    Ok(Rotation::Planar {
        p,
        q: qn,
        cos: c,
        sin,
        dim,
    })
}

/// Template set about the reference axis, in normalized coordinates where
/// the generating pair sits at +-axis/2.
#[derive(Debug, Clone)]
pub enum Template {
    /// Open ball B(0, radius). Radius 1/2 reproduces the Gabriel region.
    Ball { radius: f64 },
    /// Open lens B(axis/2, 1) intersected with B(-axis/2, 1); reproduces
    /// the relative-neighborhood region.
    Lens,
    /// Double cone around the axis intersected with an open annulus:
    /// inner < |w| < outer and |w . axis| > cos_half_angle * |w|.
    AnnulusSector {
        inner: f64,
        outer: f64,
        cos_half_angle: f64,
    },
    /// Signed distance sampled on a regular grid; inside iff the
    /// multilinear interpolant is negative. Points outside the grid's
    /// bounding box are outside the template.
    Grid(SdfGrid),
}

impl Template {
    pub fn contains(&self, w: &[f64], axis: &[f64]) -> bool {
        match self {
            Template::Ball { radius } => geom::norm2(w) < radius * radius,
            Template::Lens => {
                let mut d_plus = 0.0;
                let mut d_minus = 0.0;
                for k in 0..w.len() {
                    let a = w[k] - 0.5 * axis[k];
                    let b = w[k] + 0.5 * axis[k];
                    d_plus += a * a;
                    d_minus += b * b;
                }
                d_plus < 1.0 && d_minus < 1.0
            }
            Template::AnnulusSector {
                inner,
                outer,
                cos_half_angle,
            } => {
                let r2 = geom::norm2(w);
                if !(r2 > inner * inner && r2 < outer * outer) {
                    return false;
                }
                let a = geom::dot(w, axis);
                a * a > cos_half_angle * cos_half_angle * r2
            }
            Template::Grid(g) => g.contains(w),
        }
    }
}

/// Signed distance function sampled on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    dim: usize,
    shape: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    values: Vec<f64>,
}

impl SdfGrid {
    pub fn new(shape: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let dim = shape.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(PxgError::invalid("sdf grid: dimension out of range"));
        }
        if lo.len() != dim || hi.len() != dim {
            return Err(PxgError::invalid("sdf grid: bounds must match dimension"));
        }
        if shape.iter().any(|&s| s < 2) {
            return Err(PxgError::invalid("sdf grid: need at least 2 samples per axis"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(PxgError::invalid("sdf grid: bounds must satisfy lo < hi"));
        }
        let expect: usize = shape.iter().product();
        if values.len() != expect {
            return Err(PxgError::invalid(format!(
                "sdf grid: expected {expect} values, got {}",
                values.len()
            )));
        }
        if !geom::all_finite(&values) {
            return Err(PxgError::invalid("sdf grid: values must be finite"));
        }
        Ok(SdfGrid {
            dim,
            shape,
            lo,
            hi,
            values,
        })
    }

    pub fn from_fn(
        shape: Vec<usize>,
        lo: Vec<f64>,
        hi: Vec<f64>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let dim = shape.len();
        let count: usize = shape.iter().product();
        let mut values = Vec::with_capacity(count);
        let mut idx = vec![0usize; dim];
        let mut p = vec![0.0; dim];
        for _ in 0..count {
            for k in 0..dim {
                let step = (hi[k] - lo[k]) / (shape[k] - 1) as f64;
                p[k] = lo[k] + idx[k] as f64 * step;
            }
            values.push(f(&p));
            // Row-major order: the last axis advances fastest.
            for k in (0..dim).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        SdfGrid::new(shape, lo, hi, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Multilinear interpolation; +inf outside the bounding box.
    pub fn value(&self, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.dim);
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for k in 0..self.dim {
            if p[k] < self.lo[k] || p[k] > self.hi[k] {
                return f64::INFINITY;
            }
            let cells = (self.shape[k] - 1) as f64;
            let x = (p[k] - self.lo[k]) / (self.hi[k] - self.lo[k]) * cells;
            let mut i = x.floor() as usize;
            if i >= self.shape[k] - 1 {
                i = self.shape[k] - 2;
            }
            base[k] = i;
            frac[k] = x - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for k in 0..self.dim {
                let hi_side = (corner >> k) & 1 == 1;
                w *= if hi_side { frac[k] } else { 1.0 - frac[k] };
                flat = flat * self.shape[k] + base[k] + usize::from(hi_side);
            }
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        acc
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.value(p) < 0.0
    }
}

/// Built-in templates with certified constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinTemplate {
    /// B(0, 1/2): the Gabriel region expressed as a template.
    Ball,
    /// The relative-neighborhood lens expressed as a template.
    Lens,
    /// Double cone (half angle pi/4) cut to the annulus 1/4 < |w| < 1/2.
    AnnulusSector,
}

/// Geometric constants for a user-supplied template.
#[derive(Debug, Clone)]
pub struct TemplateConstants {
    /// D: every region point is within D * rho of both endpoints.
    pub normalized_diameter: f64,
    /// delta: S(x, y) contains a ball of radius delta * rho.
    pub ball_ratio: f64,
    /// Center of that ball, in template coordinates.
    pub inscribed_center: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RegionFamily {
    kind: FamilyKind,
    dim: usize,
    axis: Vec<f64>,
    template: Option<Template>,
    normalized_diameter: f64,
    ball_ratio: f64,
    inscribed_center: Vec<f64>,
    /// Bound on |p - m| / rho over region points p; at most
    /// sqrt(D^2 - 1/4) since the certificate balls around both endpoints
    /// intersect.
    enclosing_radius: f64,
    /// Optional window-adjusted inscribed-ball ratio, used only when
    /// reporting reference tail slopes.
    window_ball_ratio: Option<f64>,
}

fn axis_e1(dim: usize) -> Vec<f64> {
    let mut a = vec![0.0; dim];
    a[0] = 1.0;
    a
}

fn validate_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(PxgError::invalid(format!(
            "dimension must be between 1 and {MAX_DIM}, got {dim}"
        )));
    }
    Ok(())
}

impl RegionFamily {
    pub fn gabriel(dim: usize) -> Result<Self> {
        validate_dim(dim)?;
        Ok(RegionFamily {
            kind: FamilyKind::Gabriel,
            dim,
            axis: axis_e1(dim),
            template: None,
            normalized_diameter: 1.0,
            ball_ratio: 0.5,
            inscribed_center: vec![0.0; dim],
            enclosing_radius: 0.5,
            window_ball_ratio: None,
        })
    }

    pub fn relative_neighborhood(dim: usize) -> Result<Self> {
        validate_dim(dim)?;
        Ok(RegionFamily {
            kind: FamilyKind::RelativeNeighborhood,
            dim,
            axis: axis_e1(dim),
            template: None,
            normalized_diameter: 3f64.sqrt(),
            ball_ratio: 0.5,
            inscribed_center: vec![0.0; dim],
            enclosing_radius: 3f64.sqrt() / 2.0,
            window_ball_ratio: None,
        })
    }

    pub fn builtin_template(dim: usize, which: BuiltinTemplate) -> Result<Self> {
        validate_dim(dim)?;
        let axis = axis_e1(dim);
        let (template, constants) = match which {
            BuiltinTemplate::Ball => (
                Template::Ball { radius: 0.5 },
                TemplateConstants {
                    normalized_diameter: 1.0,
                    ball_ratio: 0.5,
                    inscribed_center: vec![0.0; dim],
                },
            ),
            BuiltinTemplate::Lens => (
                Template::Lens,
                TemplateConstants {
                    normalized_diameter: 3f64.sqrt(),
                    ball_ratio: 0.5,
                    inscribed_center: vec![0.0; dim],
                },
            ),
            BuiltinTemplate::AnnulusSector => {
                let mut c = vec![0.0; dim];
                c[0] = 0.375;
                (
                    Template::AnnulusSector {
                        inner: 0.25,
                        outer: 0.5,
                        cos_half_angle: std::f64::consts::FRAC_1_SQRT_2,
                    },
                    TemplateConstants {
                        normalized_diameter: 1.0,
                        ball_ratio: 0.12,
                        inscribed_center: c,
                    },
                )
            }
        };
        RegionFamily::template_isotropic(dim, template, axis, constants)
    }

    pub fn template_isotropic(
        dim: usize,
        template: Template,
        axis: Vec<f64>,
        constants: TemplateConstants,
    ) -> Result<Self> {
        validate_dim(dim)?;
        if axis.len() != dim {
            return Err(PxgError::DimensionMismatch {
                expected: dim,
                got: axis.len(),
            });
        }
        if (geom::norm2(&axis) - 1.0).abs() > 1e-9 {
            return Err(PxgError::invalid("template axis must be a unit vector"));
        }
        if let Template::Grid(g) = &template {
            if g.dim() != dim {
                return Err(PxgError::DimensionMismatch {
                    expected: dim,
                    got: g.dim(),
                });
            }
        }
        if let Template::AnnulusSector { inner, outer, cos_half_angle } = &template {
            if !(*inner >= 0.0 && inner < outer && outer.is_finite())
                || !(*cos_half_angle >= 0.0 && *cos_half_angle < 1.0)
            {
                return Err(PxgError::invalid("annulus sector parameters out of range"));
            }
        }
        let d = constants.normalized_diameter;
        if !(d.is_finite() && d >= 1.0) {
            // The endpoints lie in the closure, so any valid D is >= 1.
            return Err(PxgError::invalid(
                "normalized_diameter must be finite and >= 1",
            ));
        }
        let delta = constants.ball_ratio;
        if !(delta.is_finite() && delta > 0.0 && delta <= d) {
            return Err(PxgError::invalid("ball_ratio must be in (0, normalized_diameter]"));
        }
        if constants.inscribed_center.len() != dim {
            return Err(PxgError::DimensionMismatch {
                expected: dim,
                got: constants.inscribed_center.len(),
            });
        }
        let enclosing = (d * d - 0.25).max(0.0).sqrt();
        Ok(RegionFamily {
            kind: FamilyKind::TemplateIsotropic,
            dim,
            axis,
            template: Some(template),
            normalized_diameter: d,
            ball_ratio: delta,
            inscribed_center: constants.inscribed_center,
            enclosing_radius: enclosing,
            window_ball_ratio: None,
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn normalized_diameter(&self) -> f64 {
        self.normalized_diameter
    }

    pub fn ball_ratio(&self) -> f64 {
        self.ball_ratio
    }

    pub fn enclosing_radius(&self) -> f64 {
        self.enclosing_radius
    }

    pub fn window_ball_ratio(&self) -> Option<f64> {
        self.window_ball_ratio
    }

    pub fn set_window_ball_ratio(&mut self, delta: Option<f64>) -> Result<()> {
        if let Some(d) = delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(PxgError::invalid("window ball ratio must be positive"));
            }
        }
        self.window_ball_ratio = delta;
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            FamilyKind::Gabriel => "gabriel",
            FamilyKind::RelativeNeighborhood => "relative_neighborhood",
            FamilyKind::TemplateIsotropic => "template_isotropic",
        }
    }

    /// Checked pair construction.
    pub fn pair(&self, x: &[f64], y: &[f64]) -> Result<PairRegion<'_>> {
        if x.len() != self.dim {
            return Err(PxgError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if y.len() != self.dim {
            return Err(PxgError::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        if x.iter().zip(y).all(|(a, b)| a == b) {
            return Err(PxgError::CoincidentPair);
        }
        Ok(self.pair_unchecked(x, y))
    }

    /// Pair construction without validation; callers guarantee matching
    /// dimensions and x != y.
    pub fn pair_unchecked(&self, x: &[f64], y: &[f64]) -> PairRegion<'_> {
        let dim = self.dim;
        let mut px = [0.0; MAX_DIM];
        let mut py = [0.0; MAX_DIM];
        let mut mid = [0.0; MAX_DIM];
        px[..dim].copy_from_slice(x);
        py[..dim].copy_from_slice(y);
        let rho2 = geom::dist2(x, y);
        let rho = rho2.sqrt();
        for k in 0..dim {
            mid[k] = 0.5 * (x[k] + y[k]);
        }
        let rot = if self.kind == FamilyKind::TemplateIsotropic {
            let mut u = [0.0; MAX_DIM];
            let inv = 1.0 / rho;
            for k in 0..dim {
                u[k] = (x[k] - y[k]) * inv;
            }
            // Guard against denormal-length pairs producing a non-unit u.
            rotation_to(&self.axis, &u[..dim]).unwrap_or(Rotation::Identity)
        } else {
            Rotation::Identity
        };
        PairRegion {
            family: self,
            dim,
            x: px,
            y: py,
            mid,
            rho,
            rho2,
            rot,
        }
    }

    /// Checked single-shot membership test for S(x, y).
    pub fn contains(&self, x: &[f64], y: &[f64], z: &[f64]) -> Result<bool> {
        if z.len() != self.dim {
            return Err(PxgError::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        Ok(self.pair(x, y)?.contains(z))
    }
}

/// The region of one pair, with cached midpoint, distance, and rotation.
#[derive(Clone)]
pub struct PairRegion<'a> {
    family: &'a RegionFamily,
    dim: usize,
    x: [f64; MAX_DIM],
    y: [f64; MAX_DIM],
    mid: [f64; MAX_DIM],
    rho: f64,
    rho2: f64,
    rot: Rotation,
}

impl<'a> PairRegion<'a> {
    pub fn family(&self) -> &'a RegionFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x(&self) -> &[f64] {
        &self.x[..self.dim]
    }

    pub fn y(&self) -> &[f64] {
        &self.y[..self.dim]
    }

    pub fn midpoint(&self) -> &[f64] {
        &self.mid[..self.dim]
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Open-region membership.
    pub fn contains(&self, z: &[f64]) -> bool {
        let dim = self.dim;
        debug_assert_eq!(z.len(), dim);
        match self.family.kind {
            FamilyKind::Gabriel => {
                // |2z - x - y| < rho, summed as ((z-x) + (z-y))^2 so both
                // endpoints reproduce rho^2 bit-for-bit and stay outside.
                let mut s = 0.0;
                for k in 0..dim {
                    let t = (z[k] - self.x[k]) + (z[k] - self.y[k]);
                    s += t * t;
                }
                s < self.rho2
            }
            FamilyKind::RelativeNeighborhood => {
                geom::dist2(z, &self.x[..dim]) < self.rho2
                    && geom::dist2(z, &self.y[..dim]) < self.rho2
            }
            FamilyKind::TemplateIsotropic => {
                if geom::bits_equal(z, &self.x[..dim]) || geom::bits_equal(z, &self.y[..dim]) {
                    return false;
                }
                let mut rel = [0.0; MAX_DIM];
                let mut d2 = 0.0;
                for k in 0..dim {
                    rel[k] = z[k] - self.mid[k];
                    d2 += rel[k] * rel[k];
                }
                let enc = self.family.enclosing_radius * self.rho;
                if d2 > enc * enc * (1.0 + 1e-9) {
                    return false;
                }
                let inv = 1.0 / self.rho;
                for v in rel.iter_mut().take(dim) {
                    *v *= inv;
                }
                let mut w = [0.0; MAX_DIM];
                self.rot.apply_inverse_into(&rel[..dim], &mut w[..dim]);
                self.family
                    .template
                    .as_ref()
                    .expect("template families carry a template")
                    .contains(&w[..dim], &self.family.axis)
            }
        }
    }

    /// Certificate radius D * rho: every region point is within it of both
    /// endpoints.
    pub fn certificate_radius(&self) -> f64 {
        self.family.normalized_diameter * self.rho
    }

    /// Radius of the ball around the midpoint that encloses the region.
    pub fn enclosing_radius(&self) -> f64 {
        self.family.enclosing_radius * self.rho
    }

    /// Center of the certified inscribed ball, in world coordinates.
    pub fn inscribed_center(&self) -> Vec<f64> {
        let mut world = vec![0.0; self.dim];
        self.inscribed_center_into(&mut world);
        world
    }

    /// Allocation-free variant for per-pair hot loops.
    pub fn inscribed_center_into(&self, out: &mut [f64]) {
        let dim = self.dim;
        match self.family.kind {
            FamilyKind::Gabriel | FamilyKind::RelativeNeighborhood => {
                out[..dim].copy_from_slice(&self.mid[..dim]);
            }
            FamilyKind::TemplateIsotropic => {
                let mut rotated = [0.0; MAX_DIM];
                self.rot
                    .apply_into(&self.family.inscribed_center, &mut rotated[..dim]);
                for k in 0..dim {
                    out[k] = self.mid[k] + self.rho * rotated[k];
                }
            }
        }
    }

    pub fn inscribed_radius(&self) -> f64 {
        self.family.ball_ratio * self.rho
    }
}

/// Sampled validation of a family's certified constants and symmetries.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub samples: usize,
    /// Largest observed pairwise distance between region points, divided by
    /// the pair distance (after greedy refinement).
    pub max_pair_distance_ratio: f64,
    /// Sampled region-point pairs farther apart than D * rho.
    pub diameter_violations: usize,
    /// Points of the certified inscribed ball that failed membership.
    pub inscribed_failures: usize,
    /// Region points whose antipode (about the midpoint) fell outside.
    pub central_symmetry_violations: usize,
    /// Triples where S(x, y) and S(y, x) disagreed.
    pub swap_violations: usize,
    /// Pairs whose endpoints tested inside their own region.
    pub endpoint_violations: usize,
    /// Triples where membership changed under translation or dilation.
    pub invariance_violations: usize,
    /// Region points outside the D * rho certificate balls.
    pub certificate_violations: usize,
}

impl CertificateReport {
    pub fn is_ok(&self) -> bool {
        self.diameter_violations == 0
            && self.inscribed_failures == 0
            && self.central_symmetry_violations == 0
            && self.swap_violations == 0
            && self.endpoint_violations == 0
            && self.invariance_violations == 0
            && self.certificate_violations == 0
    }
}

fn gauss_dir(rng: &mut ChaCha8Rng, dim: usize, out: &mut [f64]) {
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut().take(dim) {
            *v = StandardNormal.sample(rng);
            n2 += *v * *v;
        }
        if n2 > 1e-12 {
            let inv = 1.0 / n2.sqrt();
            for v in out.iter_mut().take(dim) {
                *v *= inv;
            }
            return;
        }
    }
}

/// Uniform point in the ball B(center, radius).
pub(crate) fn ball_point(rng: &mut ChaCha8Rng, center: &[f64], radius: f64, out: &mut [f64]) {
    let dim = center.len();
    gauss_dir(rng, dim, out);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    for k in 0..dim {
        out[k] = center[k] + r * out[k];
    }
}

/// Rejection-samples one point of the region; None if every try misses.
pub(crate) fn sample_region_point(
    pr: &PairRegion<'_>,
    rng: &mut ChaCha8Rng,
    tries: usize,
) -> Option<Vec<f64>> {
    let dim = pr.dim();
    let mut buf = vec![0.0; dim];
    // The inscribed ball is certified, so fall back to it if the enclosing
    // ball keeps missing.
    for attempt in 0..tries {
        if attempt < tries / 2 {
            ball_point(rng, pr.midpoint(), pr.enclosing_radius(), &mut buf);
        } else {
            let c = pr.inscribed_center();
            ball_point(rng, &c, pr.inscribed_radius() * (1.0 - 1e-9), &mut buf);
        }
        if pr.contains(&buf) {
            return Some(buf);
        }
    }
    None
}

/// Validates the family's constants by sampling. `samples` controls every
/// internal sampling loop; a few thousand is plenty for the built-ins.
pub fn certify_constants(
    family: &RegionFamily,
    samples: usize,
    seed: u64,
) -> Result<CertificateReport> {
    if samples == 0 {
        return Err(PxgError::invalid("certify_constants needs samples > 0"));
    }
    let dim = family.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dd = family.normalized_diameter();

    // Canonical pair along the axis: S(x, y) is the template itself.
    let x0: Vec<f64> = family.axis().iter().map(|a| 0.5 * a).collect();
    let y0: Vec<f64> = family.axis().iter().map(|a| -0.5 * a).collect();
    let canonical = family.pair_unchecked(&x0, &y0);

    // Region diameter: collect points, take the farthest pair, refine it by
    // shrinking random ascent steps (the corners realizing the diameter can
    // carry negligible mass, so plain sampling underestimates).
    let keep = samples.min(2048).max(16);
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(keep);
    while pts.len() < keep {
        match sample_region_point(&canonical, &mut rng, 64) {
            Some(p) => pts.push(p),
            None => break,
        }
    }
    let mut diameter_violations = 0usize;
    let mut best = 0.0f64;
    let mut best_pair: Option<(Vec<f64>, Vec<f64>)> = None;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d2 = geom::dist2(&pts[i], &pts[j]);
            if d2 > best {
                best = d2;
                best_pair = Some((pts[i].clone(), pts[j].clone()));
            }
        }
        // Antipode pairing: when -p is a member too, (p, -p) is a real
        // pair at distance 2|p|, which seeds the search diametrically.
        let anti: Vec<f64> = pts[i].iter().map(|v| -v).collect();
        if canonical.contains(&anti) {
            let d2 = 4.0 * geom::norm2(&pts[i]);
            if d2 > best {
                best = d2;
                best_pair = Some((pts[i].clone(), anti));
            }
        }
    }
    let mut max_ratio = 0.0;
    if let Some((mut a, mut b)) = best_pair {
        let mut d = best.sqrt();
        let mut step = 0.25 * canonical.enclosing_radius().max(1e-9);
        let mut cand = vec![0.0; dim];
        for iter in 0..1200 {
            let move_a = iter % 2 == 0;
            let src = if move_a { &a } else { &b };
            let other = if move_a { &b } else { &a };
            let mut dir = [0.0; MAX_DIM];
            gauss_dir(&mut rng, dim, &mut dir);
            for k in 0..dim {
                cand[k] = src[k] + step * dir[k];
            }
            if canonical.contains(&cand) {
                let nd = geom::dist(&cand, other);
                if nd > d {
                    d = nd;
                    if move_a {
                        a.copy_from_slice(&cand);
                    } else {
                        b.copy_from_slice(&cand);
                    }
                }
            }
            step *= 0.995;
        }
        max_ratio = d; // canonical pair has rho = 1
        if max_ratio > dd * (1.0 + 1e-6) {
            diameter_violations += 1;
        }
    }

    // Inscribed ball: sampled points of the certified ball must be members.
    let mut inscribed_failures = 0usize;
    let c_ins = canonical.inscribed_center();
    let r_ins = canonical.inscribed_radius();
    let mut buf = vec![0.0; dim];
    for _ in 0..samples {
        ball_point(&mut rng, &c_ins, r_ins * (1.0 - 1e-9), &mut buf);
        if !canonical.contains(&buf) {
            inscribed_failures += 1;
        }
    }

    // Central symmetry about the midpoint (template symmetry S = -S).
    let mut central = 0usize;
    for p in &pts {
        let anti: Vec<f64> = p.iter().map(|v| -v).collect();
        if !canonical.contains(&anti) {
            central += 1;
        }
    }

    // Random world pairs: endpoint exclusion, swap symmetry, rigid-motion
    // invariance, and the certificate balls.
    let mut endpoint_violations = 0usize;
    let mut swap_violations = 0usize;
    let mut invariance_violations = 0usize;
    let mut certificate_violations = 0usize;
    let trials = samples.max(200);
    for _ in 0..trials {
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        for k in 0..dim {
            x[k] = rng.random::<f64>() * 2.0 - 1.0;
            y[k] = rng.random::<f64>() * 2.0 - 1.0;
        }
        if geom::bits_equal(&x, &y) {
            continue;
        }
        let pr = family.pair_unchecked(&x, &y);
        let pr_swapped = family.pair_unchecked(&y, &x);
        if pr.contains(&x) || pr.contains(&y) {
            endpoint_violations += 1;
        }
        // Probe membership around the region with a mix of hits and misses.
        let mut z = vec![0.0; dim];
        for probe in 0..4 {
            if probe < 2 {
                ball_point(&mut rng, pr.midpoint(), pr.enclosing_radius() * 1.2, &mut z);
            } else {
                match sample_region_point(&pr, &mut rng, 32) {
                    Some(p) => z.copy_from_slice(&p),
                    None => continue,
                }
            }
            let inside = pr.contains(&z);
            if inside != pr_swapped.contains(&z) {
                swap_violations += 1;
            }
            if inside {
                let dx = geom::dist(&z, &x);
                let dy = geom::dist(&z, &y);
                let cap = dd * pr.rho() * (1.0 + 1e-9);
                if dx > cap || dy > cap {
                    certificate_violations += 1;
                }
            }
            // Translation and dilation invariance.
            let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
            let scale = 0.5 + 2.5 * rng.random::<f64>();
            let xs: Vec<f64> = x.iter().zip(&shift).map(|(v, s)| v + s).collect();
            let ys: Vec<f64> = y.iter().zip(&shift).map(|(v, s)| v + s).collect();
            let zs: Vec<f64> = z.iter().zip(&shift).map(|(v, s)| v + s).collect();
            if family.pair_unchecked(&xs, &ys).contains(&zs) != inside {
                invariance_violations += 1;
            }
            let xm: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let ym: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let zm: Vec<f64> = z.iter().map(|v| v * scale).collect();
            if family.pair_unchecked(&xm, &ym).contains(&zm) != inside {
                invariance_violations += 1;
            }
        }
    }

    Ok(CertificateReport {
        samples,
        max_pair_distance_ratio: max_ratio,
        diameter_violations,
        inscribed_failures,
        central_symmetry_violations: central,
        swap_violations,
        endpoint_violations,
        invariance_violations,
        certificate_violations,
    })
}
