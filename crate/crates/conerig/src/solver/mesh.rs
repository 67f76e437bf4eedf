use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;
pub const DEFAULT_GAMMA: f64 = 2.0;

/// Nodes `r_i = a (i/M)^γ`, `i = 1..=M`; the axis `r = 0` is not a node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    a: f64,
    gamma: f64,
    nodes: Vec<f64>,
}

/// The node formula without the size floor.
pub fn mesh_nodes(a: f64, m: usize, gamma: f64) -> Vec<f64> {
    (1..=m).map(|i| if i == m { a } else { a * (i as f64 / m as f64).powf(gamma) }).collect()
}

pub fn graded_mesh(a: f64, m: usize, gamma: f64) -> Result<RadialMesh> {
    if m < MIN_POINTS {
        return Err(Error::Validation(format!("mesh needs at least {MIN_POINTS} points, got {m}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Validation(format!("tube radius must be positive, got {a}")));
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::Validation(format!("grading power must be at least 1, got {gamma}")));
    }
    Ok(RadialMesh { a, gamma, nodes: mesh_nodes(a, m, gamma) })
}

impl RadialMesh {
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn r(&self, i: usize) -> f64 {
        self.nodes[i]
    }
    /// Same grading with twice the points.
    pub fn refined(&self) -> RadialMesh {
        RadialMesh { a: self.a, gamma: self.gamma, nodes: mesh_nodes(self.a, 2 * self.len(), self.gamma) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn formula_examples() {
        assert_eq!(mesh_nodes(1.0, 4, 1.0), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(mesh_nodes(1.0, 4, 2.0), vec![0.0625, 0.25, 0.5625, 1.0]);
        let m = graded_mesh(0.5, 256, 2.0).unwrap();
        assert_relative_eq!(m.r(0), 0.5 / 65536.0, max_relative = 1e-15);
        assert_relative_eq!(m.r(0), 7.6e-6, max_relative = 1e-2);
    }

    #[test]
    fn small_meshes_rejected() {
        assert!(graded_mesh(1.0, 15, 2.0).is_err());
        assert!(graded_mesh(1.0, 16, 0.5).is_err());
        assert!(graded_mesh(-1.0, 16, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn nodes_increase_to_a(a in 0.1f64..5.0, m in 16usize..600, gamma in 1.0f64..4.0) {
            let mesh = graded_mesh(a, m, gamma).unwrap();
            let r = mesh.nodes();
            prop_assert!(r[0] > 0.0);
            prop_assert_eq!(r[m - 1], a);
            prop_assert!(r.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
