//! Discrete parameter domains: interval, circle and conformally flat rectangles.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Interval(usize),
    Circle(usize),
    Rect2d { nx: usize, ny: usize },
}

/// Conformal factor presets for rectangular grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhoPreset {
    /// `rho = 1`.
    Flat,
    /// `rho(x) = 2 / (1 + |x|^2)`, the stereographic chart of the unit sphere.
    SpherePatch,
}

impl RhoPreset {
    fn eval<T: Real>(self, x: T, y: T) -> T {
        match self {
            RhoPreset::Flat => T::one(),
            RhoPreset::SpherePatch => T::lit(2.0) / (T::one() + x * x + y * y),
        }
    }

    /// Lipschitz constant of `rho` on the unit-spacing rectangle `[0,1] x [0, ymax]`.
    pub fn lipschitz<T: Real>(self) -> T {
        match self {
            RhoPreset::Flat => T::zero(),
            // |grad rho| = 4 r / (1 + r^2)^2, maximized at r = 1/sqrt(3)
            RhoPreset::SpherePatch => T::lit(4.0 / 3f64.sqrt() / (16.0 / 9.0)),
        }
    }
}

/// Forward-difference edge `a -> b`; `a` owns the edge for node-based sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge<T> {
    pub a: usize,
    pub b: usize,
    /// Domain length of the edge (trapezoidal `rho` average times spacing in 2-D).
    pub length: T,
    /// Quadrature weight of the owning node `a`.
    pub area_weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    kind: GridKind,
    preset: RhoPreset,
    spacing: T,
    rho: Vec<T>,
    boundary: Vec<bool>,
    weights: Vec<T>,
    edges: Vec<Edge<T>>,
}

impl<T: Real> Grid<T> {
    pub fn interval(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parse(format!("interval needs n >= 2, got {n}")));
        }
        Ok(Self::build(GridKind::Interval(n), RhoPreset::Flat))
    }

    pub fn circle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Parse(format!("circle needs n >= 3, got {n}")));
        }
        Ok(Self::build(GridKind::Circle(n), RhoPreset::Flat))
    }

    pub fn rect2d(nx: usize, ny: usize, preset: RhoPreset) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Parse(format!("rect2d needs nx, ny >= 2, got {nx}x{ny}")));
        }
        Ok(Self::build(GridKind::Rect2d { nx, ny }, preset))
    }

    fn build(kind: GridKind, preset: RhoPreset) -> Self {
        let (n, spacing) = match kind {
            GridKind::Interval(n) => (n, T::one() / T::lit((n - 1) as f64)),
            GridKind::Circle(n) => (n, T::lit(2.0) * T::PI() / T::lit(n as f64)),
            GridKind::Rect2d { nx, ny } => (nx * ny, T::one() / T::lit((nx - 1) as f64)),
        };
        let mut g = Self {
            kind,
            preset,
            spacing,
            rho: vec![T::one(); n],
            boundary: vec![false; n],
            weights: vec![spacing; n],
            edges: Vec::new(),
        };
        match kind {
            GridKind::Interval(n) => {
                g.boundary[0] = true;
                g.boundary[n - 1] = true;
                g.edges = (0..n - 1).map(|a| Edge { a, b: a + 1, length: spacing, area_weight: spacing }).collect();
            }
            GridKind::Circle(n) => {
                g.edges = (0..n).map(|a| Edge { a, b: (a + 1) % n, length: spacing, area_weight: spacing }).collect();
            }
            GridKind::Rect2d { nx, ny } => {
                for j in 0..ny {
                    for i in 0..nx {
                        let k = j * nx + i;
                        let (x, y) = (T::lit(i as f64) * spacing, T::lit(j as f64) * spacing);
                        g.rho[k] = preset.eval(x, y);
                        g.boundary[k] = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                        g.weights[k] = g.rho[k] * g.rho[k] * spacing * spacing;
                    }
                }
                let half = T::lit(0.5);
                for j in 0..ny {
                    for i in 0..nx {
                        let a = j * nx + i;
                        let mut push = |b: usize| {
                            let length = half * (g.rho[a] + g.rho[b]) * spacing;
                            g.edges.push(Edge { a, b, length, area_weight: g.weights[a] });
                        };
                        if i + 1 < nx {
                            push(a + 1);
                        }
                        if j + 1 < ny {
                            push(a + nx);
                        }
                    }
                }
            }
        }
        g
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn preset(&self) -> RhoPreset {
        self.preset
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Parameter spacing `dx`.
    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    /// Nodewise quadrature weights: `dx` in 1-D, `rho^2 dx^2` in 2-D.
    pub fn area_weights(&self) -> &[T] {
        &self.weights
    }

    pub fn total_area(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Parameter-space coordinates of a node (`y = 0` on 1-D grids).
    pub fn position(&self, node: usize) -> [T; 2] {
        match self.kind {
            GridKind::Interval(_) | GridKind::Circle(_) => [T::lit(node as f64) * self.spacing, T::zero()],
            GridKind::Rect2d { nx, .. } => {
                [T::lit((node % nx) as f64) * self.spacing, T::lit((node / nx) as f64) * self.spacing]
            }
        }
    }

    /// Flat parameter distance between nodes (arc length on the circle).
    pub fn domain_distance(&self, a: usize, b: usize) -> T {
        match self.kind {
            GridKind::Interval(_) => T::lit(a.abs_diff(b) as f64) * self.spacing,
            GridKind::Circle(n) => {
                let d = a.abs_diff(b);
                T::lit(d.min(n - d) as f64) * self.spacing
            }
            GridKind::Rect2d { nx, .. } => {
                let di = T::lit((a % nx).abs_diff(b % nx) as f64);
                let dj = T::lit((a / nx).abs_diff(b / nx) as f64);
                (di * di + dj * dj).sqrt() * self.spacing
            }
        }
    }

    /// Node ordering that keeps the edge graph banded, and its bandwidth.
    ///
    /// `order[k]` is the node placed at position `k`.
    pub fn banded_order(&self) -> (Vec<usize>, usize) {
        match self.kind {
            GridKind::Interval(n) => ((0..n).collect(), 1),
            GridKind::Circle(n) => {
                let mut order = Vec::with_capacity(n);
                let (mut lo, mut hi) = (0usize, n - 1);
                while lo <= hi {
                    order.push(lo);
                    if hi != lo {
                        order.push(hi);
                    }
                    lo += 1;
                    if hi == 0 {
                        break;
                    }
                    hi -= 1;
                }
                (order, 2)
            }
            GridKind::Rect2d { nx, ny } => {
                if nx <= ny {
                    ((0..nx * ny).collect(), nx)
                } else {
                    let order = (0..nx).flat_map(|i| (0..ny).map(move |j| j * nx + i)).collect();
                    (order, ny)
                }
            }
        }
    }
}

impl<T: Real> fmt::Display for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GridKind::Interval(n) => write!(f, "interval:{n}"),
            GridKind::Circle(n) => write!(f, "circle:{n}"),
            GridKind::Rect2d { nx, ny } => match self.preset {
                RhoPreset::Flat => write!(f, "rect2d:{nx}x{ny}"),
                RhoPreset::SpherePatch => write!(f, "rect2d:{nx}x{ny}:rho=sphere_patch"),
            },
        }
    }
}

impl<T: Real> FromStr for Grid<T> {
    type Err = Error;

    /// Parses `interval:N`, `circle:N`, `rect2d:NXxNY[:rho=flat|sphere_patch]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid grid spec '{s}'"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["interval", n] => Self::interval(n.parse().map_err(|_| bad())?),
            ["circle", n] => Self::circle(n.parse().map_err(|_| bad())?),
            ["rect2d", dims, rest @ ..] if rest.len() <= 1 => {
                let (nx, ny) = dims.split_once('x').ok_or_else(bad)?;
                let nx = nx.parse().map_err(|_| bad())?;
                let ny = ny.parse().map_err(|_| bad())?;
                let preset = match rest.first() {
                    None | Some(&"rho=flat") => RhoPreset::Flat,
                    Some(&"rho=sphere_patch") => RhoPreset::SpherePatch,
                    Some(_) => return Err(bad()),
                };
                Self::rect2d(nx, ny, preset)
            }
            _ => Err(bad()),
        }
    }
}

/// One target point per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub values: Vec<Point<T>>,
}

impl<T: Real> Field<T> {
    pub fn new(values: Vec<Point<T>>) -> Self {
        Self { values }
    }

    pub fn constant(p: &Point<T>, n: usize) -> Self {
        Self { values: vec![p.clone(); n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks node count and the point constraint of every value.
    pub fn validate(&self, m: &Manifold<T>, grid: &Grid<T>) -> Result<()> {
        check_len(self, grid)?;
        self.values.iter().try_for_each(|p| m.check_point(p))
    }

    /// Scalar samples of a 1-D euclidean field.
    pub fn from_scalars(values: &[T]) -> Self {
        Self { values: values.iter().map(|&v| Point::new(vec![v])).collect() }
    }

    pub fn to_scalars(&self) -> Vec<T> {
        self.values.iter().map(|p| p.coords[0]).collect()
    }
}

pub(crate) fn check_len<T: Real>(field: &Field<T>, grid: &Grid<T>) -> Result<()> {
    if field.len() != grid.len() {
        return Err(Error::GridMismatch(format!("field has {} values, grid has {} nodes", field.len(), grid.len())));
    }
    Ok(())
}

/// Discrete Lipschitz constant: max over edges of target distance over domain length.
pub fn lipschitz_constant<T: Real>(m: &Manifold<T>, grid: &Grid<T>, field: &Field<T>) -> Result<T> {
    check_len(field, grid)?;
    Ok(grid.edges().iter().fold(T::zero(), |acc, e| acc.max(m.dist(&field.values[e.a], &field.values[e.b]) / e.length)))
}
