use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::{MetricField, TorusGrid};

/// Closed-form indicator shapes in the torus distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Ball { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
}

impl Shape {
    pub fn contains(&self, grid: &TorusGrid, x: [f64; 2]) -> bool {
        match *self {
            Shape::Ball { center, radius } => grid.distance(center, x) < radius,
            Shape::Annulus { center, inner, outer } => {
                let r = grid.distance(center, x);
                r >= inner && r < outer
            }
        }
    }

    pub fn nodes(&self, grid: &TorusGrid) -> Vec<usize> {
        (0..grid.node_count())
            .filter(|&i| self.contains(grid, grid.coordinates(i)))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Ball { radius, .. } => radius > 0.0,
            Shape::Annulus { inner, outer, .. } => inner >= 0.0 && outer > inner,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("degenerate shape {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Omega,
    W1,
    W2,
    /// Both measurement sets (overlapping configurations).
    W12,
    Exterior,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Omega => "omega",
            Role::W1 => "w1",
            Role::W2 => "w2",
            Role::W12 => "w1w2",
            Role::Exterior => "ext",
        }
    }
}

/// Node sets Ω, W₁, W₂ and the exterior Ω_e = complement(Ω).
#[derive(Clone, Debug)]
pub struct ExteriorConfig {
    grid: TorusGrid,
    omega: Vec<usize>,
    w1: Vec<usize>,
    w2: Vec<usize>,
    exterior: Vec<usize>,
    in_omega: Vec<bool>,
}

impl ExteriorConfig {
    /// Validates set consistency and connectivity of the exterior.
    pub fn from_nodes(grid: &TorusGrid, omega: Vec<usize>, w1: Vec<usize>, w2: Vec<usize>) -> Result<Self> {
        let n = grid.node_count();
        let mut in_omega = vec![false; n];
        for set in [&omega, &w1, &w2] {
            if set.is_empty() {
                return Err(Error::Config("omega, w1 and w2 must all be nonempty".into()));
            }
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(Error::Config(format!("node {bad} out of range for {n} nodes")));
            }
        }
        for &i in &omega {
            in_omega[i] = true;
        }
        if omega.len() == n {
            return Err(Error::Config("omega covers the whole grid; there is no exterior".into()));
        }
        for (name, set) in [("w1", &w1), ("w2", &w2)] {
            if let Some(&bad) = set.iter().find(|&&i| in_omega[i]) {
                return Err(Error::Config(format!("{name} node {bad} lies in omega")));
            }
        }
        let exterior: Vec<usize> = (0..n).filter(|&i| !in_omega[i]).collect();
        let cfg = Self {
            grid: grid.clone(),
            omega: sorted(omega),
            w1: sorted(w1),
            w2: sorted(w2),
            exterior,
            in_omega,
        };
        if !cfg.exterior_connected() {
            return Err(Error::Config("exterior is not connected as a grid graph".into()));
        }
        Ok(cfg)
    }

    /// Builds the sets from shapes and requires every W_i to stay more than `2h` from Ω.
    /// Unless `allow_overlap`, W₁ and W₂ must also be more than `2h` apart.
    pub fn from_shapes(grid: &TorusGrid, omega: Shape, w1: Shape, w2: Shape, allow_overlap: bool) -> Result<Self> {
        for s in [&omega, &w1, &w2] {
            s.validate()?;
        }
        let cfg = Self::from_nodes(grid, omega.nodes(grid), w1.nodes(grid), w2.nodes(grid))?;
        let gap = 2.0 * grid.spacing();
        for (name, set) in [("w1", &cfg.w1), ("w2", &cfg.w2)] {
            let d = set_distance(grid, set, &cfg.omega);
            if d <= gap {
                return Err(Error::Config(format!("{name} is within {d} of omega (need > 2h = {gap})")));
            }
        }
        if !allow_overlap {
            let d = set_distance(grid, &cfg.w1, &cfg.w2);
            if d <= gap {
                return Err(Error::Config(format!("w1 and w2 are {d} apart (need > 2h = {gap})")));
            }
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn w1(&self) -> &[usize] {
        &self.w1
    }

    pub fn w2(&self) -> &[usize] {
        &self.w2
    }

    pub fn exterior(&self) -> &[usize] {
        &self.exterior
    }

    pub fn in_omega(&self, i: usize) -> bool {
        self.in_omega[i]
    }

    /// Same sets with the roles of W₁ and W₂ exchanged.
    pub fn swapped(&self) -> Self {
        let mut s = self.clone();
        std::mem::swap(&mut s.w1, &mut s.w2);
        s
    }

    pub fn role(&self, i: usize) -> Role {
        if self.in_omega[i] {
            return Role::Omega;
        }
        match (self.w1.binary_search(&i).is_ok(), self.w2.binary_search(&i).is_ok()) {
            (true, true) => Role::W12,
            (true, false) => Role::W1,
            (false, true) => Role::W2,
            (false, false) => Role::Exterior,
        }
    }

    /// Fails unless `u` vanishes on every node outside `allowed`.
    pub fn check_support(&self, u: &[f64], allowed: &[usize], name: &str) -> Result<()> {
        let mut ok = vec![false; self.grid.node_count()];
        for &i in allowed {
            ok[i] = true;
        }
        match u.iter().enumerate().find(|(i, v)| !ok[*i] && **v != 0.0) {
            Some((i, v)) => Err(Error::Support(format!("{name} has value {v} at node {i} outside its allowed set"))),
            None => Ok(()),
        }
    }

    /// Node-exact agreement of two metrics on the exterior.
    pub fn check_exterior_agreement(&self, g1: &MetricField, g2: &MetricField) -> Result<()> {
        for &i in &self.exterior {
            let d = g1.tensor()[i].max_abs_diff(&g2.tensor()[i]);
            if d != 0.0 {
                return Err(Error::Config(format!(
                    "metrics differ by {d:e} at exterior node {i}; the comparison needs equal exterior metrics"
                )));
            }
        }
        Ok(())
    }

    fn exterior_connected(&self) -> bool {
        let n = self.grid.node_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([self.exterior[0]]);
        seen[self.exterior[0]] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for axis in 0..self.grid.dim() {
                for off in [-1, 1] {
                    let j = self.grid.shifted(i, axis, off);
                    if !seen[j] && !self.in_omega[j] {
                        seen[j] = true;
                        count += 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        count == self.exterior.len()
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Smallest torus distance between nodes of two sets.
pub fn set_distance(grid: &TorusGrid, a: &[usize], b: &[usize]) -> f64 {
    let mut d = f64::INFINITY;
    for &i in a {
        for &j in b {
            d = d.min(grid.node_distance(i, j));
        }
    }
    d
}
