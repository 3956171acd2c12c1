//! DC solution of a G-input crossbar column.
//!
//! The bit line is driven from the top through `r_driver`; the sense line is
//! collected at the bottom through `r_sink` into a virtual ground (the ADC's
//! transimpedance input). Adjacent rows are joined by one wire segment on
//! each line, and each row's cell connects its BL node (drain) to its SL
//! node (source). Row 0 is the top (driver end), row `n - 1` sits next to
//! the ADC.
//!
//! Unknowns are ordered `bl_0, sl_0, bl_1, sl_1, ...`, which keeps the
//! Jacobian within a bandwidth of two. Zero-valued resistors merge their end
//! nodes; nodes merged with the driver or ground become fixed voltages.

mod banded;

pub use banded::BandedMatrix;

use nalgebra::{DMatrix, DVector};

use crate::cells::{CellState, CellTechnology};
use crate::error::{Error, Result};
use crate::mvm::CrossbarInstance;

/// Converged when every node residual is at most this (A).
pub const RESIDUAL_TOLERANCE: f64 = 1e-13;
pub const MAX_NEWTON_ITERATIONS: usize = 100;
pub const MAX_STEP_HALVINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnCell {
    pub state: CellState,
    pub v_gate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnNetwork {
    pub r_segment: f64,
    pub r_driver: f64,
    pub r_sink: f64,
    pub v_bl: f64,
    /// Top to bottom.
    pub cells: Vec<ColumnCell>,
}

impl ColumnNetwork {
    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::invalid("column needs at least one row"));
        }
        for r in [self.r_segment, self.r_driver, self.r_sink] {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::invalid("column resistances must be finite and non-negative"));
            }
        }
        if !self.v_bl.is_finite() {
            return Err(Error::invalid("bit-line voltage must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSolution {
    pub bl_voltages: Vec<f64>,
    pub sl_voltages: Vec<f64>,
    /// Current delivered into the ADC virtual ground.
    pub i_out: f64,
    /// Current drawn from the bit-line driver.
    pub i_in: f64,
    pub newton_iters: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Unknown(usize),
    Fixed(f64),
}

const DRIVER: usize = 0;
const GROUND: usize = 1;

fn bl(row: usize) -> usize {
    2 + 2 * row
}

fn sl(row: usize) -> usize {
    3 + 2 * row
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// KCL equations of one column after node merging.
struct System<'a> {
    net: &'a ColumnNetwork,
    tech: &'a CellTechnology,
    nodes: Vec<Node>,
    group: Vec<usize>,
    /// Resistors between distinct groups: (node a, node b, conductance).
    resistors: Vec<(usize, usize, f64)>,
    n_unknowns: usize,
    bandwidth: usize,
}

/// Receives Jacobian entries.
trait Stamp {
    fn stamp(&mut self, row: usize, col: usize, v: f64);
}

impl Stamp for BandedMatrix {
    fn stamp(&mut self, row: usize, col: usize, v: f64) {
        self.add(row, col, v);
    }
}

impl Stamp for DMatrix<f64> {
    fn stamp(&mut self, row: usize, col: usize, v: f64) {
        self[(row, col)] += v;
    }
}

impl<'a> System<'a> {
    fn new(net: &'a ColumnNetwork, tech: &'a CellTechnology) -> Result<Self> {
        net.validate()?;
        let n = net.n_rows();
        let n_phys = 2 + 2 * n;

        let mut all: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * n + 1);
        all.push((DRIVER, bl(0), net.r_driver));
        for i in 0..n - 1 {
            all.push((bl(i), bl(i + 1), net.r_segment));
            all.push((sl(i), sl(i + 1), net.r_segment));
        }
        all.push((sl(n - 1), GROUND, net.r_sink));

        let mut parent: Vec<usize> = (0..n_phys).collect();
        for &(a, b, r) in &all {
            if r == 0.0 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    // Keep the driver/ground as representatives.
                    let (keep, drop) = if rb < ra { (rb, ra) } else { (ra, rb) };
                    parent[drop] = keep;
                }
            }
        }
        let group: Vec<usize> = (0..n_phys).map(|x| find(&mut parent, x)).collect();
        if group[DRIVER] == group[GROUND] {
            return Err(Error::invalid("driver shorted to ground"));
        }

        let mut unknown_of_group = vec![usize::MAX; n_phys];
        let mut n_unknowns = 0;
        let mut nodes = vec![Node::Fixed(0.0); n_phys];
        nodes[DRIVER] = Node::Fixed(net.v_bl);
        for phys in 2..n_phys {
            let g = group[phys];
            nodes[phys] = if g == group[DRIVER] {
                Node::Fixed(net.v_bl)
            } else if g == group[GROUND] {
                Node::Fixed(0.0)
            } else {
                if unknown_of_group[g] == usize::MAX {
                    unknown_of_group[g] = n_unknowns;
                    n_unknowns += 1;
                }
                Node::Unknown(unknown_of_group[g])
            };
        }

        let resistors: Vec<_> = all
            .into_iter()
            .filter(|&(a, b, r)| r > 0.0 && group[a] != group[b])
            .map(|(a, b, r)| (a, b, 1.0 / r))
            .collect();

        let mut bandwidth = 0;
        let mut couple = |a: Node, b: Node| {
            if let (Node::Unknown(x), Node::Unknown(y)) = (a, b) {
                bandwidth = bandwidth.max(x.abs_diff(y));
            }
        };
        for &(a, b, _) in &resistors {
            couple(nodes[a], nodes[b]);
        }
        for row in 0..n {
            couple(nodes[bl(row)], nodes[sl(row)]);
        }

        Ok(Self { net, tech, nodes, group, resistors, n_unknowns, bandwidth })
    }

    fn voltage(&self, phys: usize, x: &[f64]) -> f64 {
        match self.nodes[phys] {
            Node::Unknown(i) => x[i],
            Node::Fixed(v) => v,
        }
    }

    fn initial_guess(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_unknowns];
        for row in 0..self.net.n_rows() {
            if let Node::Unknown(i) = self.nodes[bl(row)] {
                x[i] = self.net.v_bl;
            }
        }
        x
    }

    /// Fill `f` with the current leaving each unknown node; optionally stamp
    /// the Jacobian `∂f/∂x`.
    fn residual(&self, x: &[f64], f: &mut [f64], mut jac: Option<&mut dyn Stamp>) {
        f.iter_mut().for_each(|v| *v = 0.0);
        for &(a, b, g) in &self.resistors {
            let i = g * (self.voltage(a, x) - self.voltage(b, x));
            let (na, nb) = (self.nodes[a], self.nodes[b]);
            if let Node::Unknown(ia) = na {
                f[ia] += i;
            }
            if let Node::Unknown(ib) = nb {
                f[ib] -= i;
            }
            if let Some(j) = jac.as_deref_mut() {
                if let Node::Unknown(ia) = na {
                    j.stamp(ia, ia, g);
                    if let Node::Unknown(ib) = nb {
                        j.stamp(ia, ib, -g);
                    }
                }
                if let Node::Unknown(ib) = nb {
                    j.stamp(ib, ib, g);
                    if let Node::Unknown(ia) = na {
                        j.stamp(ib, ia, -g);
                    }
                }
            }
        }
        for (row, cell) in self.net.cells.iter().enumerate() {
            let (d, s) = (bl(row), sl(row));
            let e = self.tech.eval(&cell.state, cell.v_gate, self.voltage(d, x), self.voltage(s, x));
            let (nd, ns) = (self.nodes[d], self.nodes[s]);
            if let Node::Unknown(id) = nd {
                f[id] += e.current;
            }
            if let Node::Unknown(is) = ns {
                f[is] -= e.current;
            }
            if let Some(j) = jac.as_deref_mut() {
                if let Node::Unknown(id) = nd {
                    j.stamp(id, id, e.d_drain);
                    if let Node::Unknown(is) = ns {
                        j.stamp(id, is, e.d_source);
                    }
                }
                if let Node::Unknown(is) = ns {
                    j.stamp(is, is, -e.d_source);
                    if let Node::Unknown(id) = nd {
                        j.stamp(is, id, -e.d_drain);
                    }
                }
            }
        }
    }

    /// Net current (leaving driver group, entering ground group).
    fn terminal_currents(&self, x: &[f64]) -> (f64, f64) {
        let (gd, gg) = (self.group[DRIVER], self.group[GROUND]);
        let (mut i_in, mut i_out) = (0.0, 0.0);
        let mut branch = |a: usize, b: usize, i: f64| {
            if self.group[a] == gd && self.group[b] != gd {
                i_in += i;
            }
            if self.group[b] == gg && self.group[a] != gg {
                i_out += i;
            }
        };
        for &(a, b, g) in &self.resistors {
            let i = g * (self.voltage(a, x) - self.voltage(b, x));
            branch(a, b, i);
            // Resistor currents can run either way.
            branch(b, a, -i);
        }
        for (row, cell) in self.net.cells.iter().enumerate() {
            let (d, s) = (bl(row), sl(row));
            let i = self.tech.eval(&cell.state, cell.v_gate, self.voltage(d, x), self.voltage(s, x)).current;
            branch(d, s, i);
        }
        (i_in, i_out)
    }

    fn finish(&self, x: &[f64], iters: usize, max_residual: f64) -> ColumnSolution {
        let n = self.net.n_rows();
        let (i_in, i_out) = self.terminal_currents(x);
        ColumnSolution {
            bl_voltages: (0..n).map(|r| self.voltage(bl(r), x)).collect(),
            sl_voltages: (0..n).map(|r| self.voltage(sl(r), x)).collect(),
            i_out,
            i_in,
            newton_iters: iters,
            max_residual,
        }
    }
}

fn norms(f: &[f64]) -> (f64, f64) {
    let max = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l2 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    (max, l2)
}

/// Linear solve of `J dx = rhs` for one Newton step.
trait LinearStep {
    fn prepare(&mut self);
    fn jacobian(&mut self) -> &mut dyn Stamp;
    fn solve(&mut self, rhs: &mut [f64]) -> Result<()>;
}

struct Banded(BandedMatrix);

impl LinearStep for Banded {
    fn prepare(&mut self) {
        self.0.clear();
    }
    fn jacobian(&mut self) -> &mut dyn Stamp {
        &mut self.0
    }
    fn solve(&mut self, rhs: &mut [f64]) -> Result<()> {
        self.0.factor()?;
        self.0.solve(rhs);
        Ok(())
    }
}

struct Dense(DMatrix<f64>);

impl LinearStep for Dense {
    fn prepare(&mut self) {
        self.0.fill(0.0);
    }
    fn jacobian(&mut self) -> &mut dyn Stamp {
        &mut self.0
    }
    fn solve(&mut self, rhs: &mut [f64]) -> Result<()> {
        let lu = self.0.clone().lu();
        let b = DVector::from_column_slice(rhs);
        let x = lu.solve(&b).ok_or(Error::SingularJacobian { pivot: 0 })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularJacobian { pivot: 0 });
        }
        rhs.copy_from_slice(x.as_slice());
        Ok(())
    }
}

fn newton(sys: &System, lin: &mut dyn LinearStep) -> Result<ColumnSolution> {
    let n = sys.n_unknowns;
    let mut x = sys.initial_guess();
    let mut f = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    sys.residual(&x, &mut f, None);
    let (mut max_res, mut l2) = norms(&f);

    for iter in 0..MAX_NEWTON_ITERATIONS {
        if max_res <= RESIDUAL_TOLERANCE {
            return Ok(sys.finish(&x, iter, max_res));
        }
        lin.prepare();
        sys.residual(&x, &mut f, Some(lin.jacobian()));
        let mut dx: Vec<f64> = f.iter().map(|v| -v).collect();
        lin.solve(&mut dx)?;

        let mut lambda = 1.0;
        for halving in 0..=MAX_STEP_HALVINGS {
            for k in 0..n {
                trial[k] = x[k] + lambda * dx[k];
            }
            sys.residual(&trial, &mut f_trial, None);
            let (_, l2_trial) = norms(&f_trial);
            if l2_trial < l2 || halving == MAX_STEP_HALVINGS {
                break;
            }
            lambda *= 0.5;
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut f, &mut f_trial);
        (max_res, l2) = norms(&f);
    }
    if max_res <= RESIDUAL_TOLERANCE {
        return Ok(sys.finish(&x, MAX_NEWTON_ITERATIONS, max_res));
    }
    Err(Error::NonConvergence { iterations: MAX_NEWTON_ITERATIONS, residual: max_res })
}

/// Newton-Raphson on the column KCL with a banded LU per step.
pub fn solve_column(net: &ColumnNetwork, tech: &CellTechnology) -> Result<ColumnSolution> {
    let sys = System::new(net, tech)?;
    if sys.n_unknowns == 0 {
        return Ok(sys.finish(&[], 0, 0.0));
    }
    let bw = sys.bandwidth;
    let mut lin = Banded(BandedMatrix::new(sys.n_unknowns, bw, bw));
    newton(&sys, &mut lin)
}

/// Reference solver: same equations, dense Jacobian and full LU.
pub fn oracle_solve(net: &ColumnNetwork, tech: &CellTechnology) -> Result<ColumnSolution> {
    if net.n_rows() > 256 {
        return Err(Error::invalid("oracle_solve is limited to 256 rows"));
    }
    let sys = System::new(net, tech)?;
    if sys.n_unknowns == 0 {
        return Ok(sys.finish(&[], 0, 0.0));
    }
    let mut lin = Dense(DMatrix::zeros(sys.n_unknowns, sys.n_unknowns));
    newton(&sys, &mut lin)
}

/// Solve every column of a crossbar; results are in column order.
pub fn solve_array(xbar: &CrossbarInstance) -> Result<Vec<ColumnSolution>> {
    (0..xbar.cols())
        .map(|c| {
            solve_column(&xbar.column_network(c), &xbar.tech)
                .map_err(|e| Error::Column { index: c, source: Box::new(e) })
        })
        .collect()
}
