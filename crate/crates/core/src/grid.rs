use alloc::vec::Vec;

use num_rational::Rational64;

use crate::error::Error;
use crate::funcspace::Domain;

/// Uniform grid with `resolution` points per axis on every component.
///
/// Points are numbered component-major, then by axis with the first axis
/// varying slowest. Coordinates are `j / resolution`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    dimension: usize,
    components: usize,
    resolution: usize,
}

impl Grid {
    pub fn new(domain: &Domain, resolution: usize) -> Result<Self, Error> {
        if resolution == 0 {
            return Err(Error::OutOfRange {
                what: "grid resolution",
                value: 0,
            });
        }
        Ok(Grid {
            dimension: domain.dimension(),
            components: domain.components(),
            resolution,
        })
    }

    /// 256 points in one dimension, 64² in two, 16³ in three.
    pub fn default_for(domain: &Domain) -> Self {
        let resolution = match domain.dimension() {
            1 => 256,
            2 => 64,
            _ => 16,
        };
        Grid::new(domain, resolution).expect("positive resolution")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn per_component(&self) -> usize {
        self.resolution.pow(self.dimension as u32)
    }

    pub fn len(&self) -> usize {
        self.components * self.per_component()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn component_of(&self, index: usize) -> usize {
        index / self.per_component()
    }

    /// Integer lattice coordinates of a point.
    pub fn lattice(&self, index: usize) -> Vec<usize> {
        let mut rem = index % self.per_component();
        let mut out = alloc::vec![0; self.dimension];
        for axis in (0..self.dimension).rev() {
            out[axis] = rem % self.resolution;
            rem /= self.resolution;
        }
        out
    }

    pub fn index_of(&self, component: usize, lattice: &[usize]) -> usize {
        let local = lattice
            .iter()
            .fold(0, |acc, &j| acc * self.resolution + j % self.resolution);
        component * self.per_component() + local
    }

    pub fn coords(&self, index: usize) -> Vec<f64> {
        self.lattice(index)
            .into_iter()
            .map(|j| j as f64 / self.resolution as f64)
            .collect()
    }

    pub fn coords_exact(&self, index: usize) -> Vec<Rational64> {
        self.lattice(index)
            .into_iter()
            .map(|j| Rational64::new(j as i64, self.resolution as i64))
            .collect()
    }

    /// Nearest grid point to `x` on the given component (periodic).
    pub fn nearest_index(&self, component: usize, x: &[f64]) -> usize {
        let n = self.resolution as f64;
        let lattice: Vec<usize> = x
            .iter()
            .map(|&xi| {
                let f = xi - libm::floor(xi);
                (libm::round(f * n) as usize) % self.resolution
            })
            .collect();
        self.index_of(component, &lattice)
    }

    /// Neighbor one step along `axis` (periodic).
    pub fn step(&self, index: usize, axis: usize, forward: bool) -> usize {
        let mut l = self.lattice(index);
        l[axis] = if forward {
            (l[axis] + 1) % self.resolution
        } else {
            (l[axis] + self.resolution - 1) % self.resolution
        };
        self.index_of(self.component_of(index), &l)
    }
}

/// Scalar values on every point of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    grid: Grid,
    values: Vec<f64>,
}

impl GridField {
    /// Panics when `values` does not match the grid size.
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "grid field size");
        GridField { grid, values }
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        GridField {
            grid,
            values: alloc::vec![v; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn check_same_grid(&self, grid: &Grid) -> Result<(), Error> {
        if &self.grid == grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_round_trip_and_steps() {
        let g = Grid::new(&Domain::new(2, 2).unwrap(), 8).unwrap();
        assert_eq!(g.len(), 128);
        for i in 0..g.len() {
            assert_eq!(g.index_of(g.component_of(i), &g.lattice(i)), i);
        }
        let i = g.index_of(1, &[7, 3]);
        assert_eq!(g.lattice(g.step(i, 0, true)), alloc::vec![0, 3]);
        assert_eq!(g.component_of(g.step(i, 0, true)), 1);
        assert_eq!(g.nearest_index(1, &[0.999, 0.376]), g.index_of(1, &[0, 3]));
    }
}
