//! Circuit graph and nodal-system assembly.
//!
//! A [`Netlist`] is a flat list of two-terminal resistive branches,
//! grounded capacitors and grounded excitations over labelled physical nodes.
//! Assembly merges nodes joined by zero-ohm branches into nets, pins nets that
//! hold an ideal voltage source (or ground) to a known potential, and stamps
//! the remaining unknown nets into a symmetric conductance matrix. Eliminating
//! pinned nets keeps the matrix symmetric positive definite without extra
//! current variables, and it is exact: a voltage source behind a wire segment
//! is the Norton equivalent of that segment.
//!
//! [`build_topology`] lays a crossbar out on top of this: one row line and one
//! column line per junction, memristors across them, wire segments along them,
//! and a terminal resistance from the bottom of every column to ground.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::device::MemristorDevice;
use crate::error::{ensure_non_negative, Error, Result};
use crate::grid::Grid;
use crate::solver::{Scalar, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const GROUND: NodeId = NodeId(0);
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Ground,
    /// Ideal supply behind the source resistance of a voltage-driven row.
    Supply { row: usize },
    /// Left end of a row line, where the drive is applied.
    Drive { row: usize },
    Row { row: usize, col: usize },
    Column { row: usize, col: usize },
    Named(String),
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeLabel::Ground => write!(f, "ground"),
            NodeLabel::Supply { row } => write!(f, "supply[{row}]"),
            NodeLabel::Drive { row } => write!(f, "drive[{row}]"),
            NodeLabel::Row { row, col } => write!(f, "row[{row}][{col}]"),
            NodeLabel::Column { row, col } => write!(f, "col[{row}][{col}]"),
            NodeLabel::Named(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    SourceResistance { row: usize },
    RowWire { row: usize, segment: usize },
    ColumnWire { col: usize, segment: usize },
    Memristor { row: usize, col: usize },
    Terminal { col: usize },
    Resistor,
}

/// Resistive branch between `a` and `b`; zero resistance is an ideal short.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub a: NodeId,
    pub b: NodeId,
    pub resistance: f64,
    pub kind: BranchKind,
}

impl Branch {
    pub fn is_short(&self) -> bool {
        self.resistance == 0.0
    }

    pub fn conductance(&self) -> f64 {
        1.0 / self.resistance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacitor {
    pub node: NodeId,
    pub farads: f64,
}

/// Grounded excitation. A current source pushes `amps` from ground into `node`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Excitation {
    Voltage { node: NodeId, volts: f64 },
    Current { node: NodeId, amps: f64 },
}

impl Excitation {
    pub fn node(&self) -> NodeId {
        match *self {
            Excitation::Voltage { node, .. } | Excitation::Current { node, .. } => node,
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Excitation::Voltage { volts, .. } => volts,
            Excitation::Current { amps, .. } => amps,
        }
    }
}

/// Current leaving the node set `side` through `branch`.
///
/// Measured directly across the branch when it has resistance, and by KCL
/// over `side` when it is a short.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub label: String,
    pub branch: usize,
    pub side: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    labels: Vec<NodeLabel>,
    branches: Vec<Branch>,
    capacitors: Vec<Capacitor>,
    excitations: Vec<Excitation>,
    probes: Vec<Probe>,
}

impl Default for Netlist {
    fn default() -> Self {
        Self::new()
    }
}

impl Netlist {
    pub fn new() -> Self {
        Self {
            labels: vec![NodeLabel::Ground],
            branches: Vec::new(),
            capacitors: Vec::new(),
            excitations: Vec::new(),
            probes: Vec::new(),
        }
    }

    pub fn add_node(&mut self, label: NodeLabel) -> NodeId {
        self.labels.push(label);
        NodeId(self.labels.len() - 1)
    }

    pub fn add_resistor(&mut self, a: NodeId, b: NodeId, ohms: f64, kind: BranchKind) -> usize {
        self.branches.push(Branch {
            a,
            b,
            resistance: ohms,
            kind,
        });
        self.branches.len() - 1
    }

    pub fn add_capacitor(&mut self, node: NodeId, farads: f64) {
        self.capacitors.push(Capacitor { node, farads });
    }

    pub fn add_voltage_source(&mut self, node: NodeId, volts: f64) {
        self.excitations.push(Excitation::Voltage { node, volts });
    }

    pub fn add_current_source(&mut self, node: NodeId, amps: f64) {
        self.excitations.push(Excitation::Current { node, amps });
    }

    pub fn add_probe(&mut self, label: impl Into<String>, branch: usize, side: Vec<NodeId>) {
        self.probes.push(Probe {
            label: label.into(),
            branch,
            side,
        });
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, node: NodeId) -> &NodeLabel {
        &self.labels[node.0]
    }

    pub fn labels(&self) -> &[NodeLabel] {
        &self.labels
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn capacitors(&self) -> &[Capacitor] {
        &self.capacitors
    }

    pub fn excitations(&self) -> &[Excitation] {
        &self.excitations
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    fn check_node(&self, node: NodeId, what: &str) -> Result<()> {
        if node.0 >= self.labels.len() {
            return Err(Error::invalid(format!(
                "{what} refers to unknown node {}",
                node.0
            )));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for (k, br) in self.branches.iter().enumerate() {
            self.check_node(br.a, "branch")?;
            self.check_node(br.b, "branch")?;
            ensure_non_negative(&format!("resistance of branch {k}"), br.resistance)?;
        }
        for cap in &self.capacitors {
            self.check_node(cap.node, "capacitor")?;
            ensure_non_negative("capacitance", cap.farads)?;
        }
        for ex in &self.excitations {
            self.check_node(ex.node(), "excitation")?;
            crate::error::ensure_finite("excitation value", ex.value())?;
        }
        Ok(())
    }

    /// Merges shorted nodes, pins source and ground nets, and stamps the
    /// unknown nets.
    pub fn assemble(&self) -> Result<NodalSystem> {
        self.validate()?;
        let n_phys = self.labels.len();

        let mut uf = UnionFind::new(n_phys);
        for br in self.branches.iter().filter(|b| b.is_short()) {
            uf.union(br.a.0, br.b.0);
        }

        // pinned nets: ground first, then one per voltage source
        let mut fixed: Vec<FixedNet> = vec![FixedNet {
            potential: 0.0,
            source: None,
            members: Vec::new(),
        }];
        let mut root_fixed: HashMap<usize, usize> = HashMap::new();
        root_fixed.insert(uf.find(0), 0);
        for (idx, ex) in self.excitations.iter().enumerate() {
            if let Excitation::Voltage { node, volts } = *ex {
                let root = uf.find(node.0);
                if let Some(&other) = root_fixed.get(&root) {
                    let what = if other == 0 {
                        "ground".to_string()
                    } else {
                        "another voltage source".to_string()
                    };
                    return Err(Error::invalid(format!(
                        "voltage source at {} is shorted to {what}",
                        self.labels[node.0]
                    )));
                }
                root_fixed.insert(root, fixed.len());
                fixed.push(FixedNet {
                    potential: volts,
                    source: Some(idx),
                    members: Vec::new(),
                });
            }
        }

        let mut node_net = Vec::with_capacity(n_phys);
        let mut root_unknown: HashMap<usize, usize> = HashMap::new();
        let mut unknown_members: Vec<Vec<NodeId>> = Vec::new();
        for n in 0..n_phys {
            let root = uf.find(n);
            let net = if let Some(&f) = root_fixed.get(&root) {
                fixed[f].members.push(NodeId(n));
                Net::Fixed(f)
            } else {
                let k = *root_unknown.entry(root).or_insert_with(|| {
                    unknown_members.push(Vec::new());
                    unknown_members.len() - 1
                });
                unknown_members[k].push(NodeId(n));
                Net::Unknown(k)
            };
            node_net.push(net);
        }

        let n = unknown_members.len();
        let mut triplets = Vec::with_capacity(4 * self.branches.len());
        let mut src = vec![0.0; n];
        for br in self.branches.iter().filter(|b| !b.is_short()) {
            let g = br.conductance();
            match (node_net[br.a.0], node_net[br.b.0]) {
                (Net::Unknown(i), Net::Unknown(j)) if i != j => {
                    triplets.push((i, i, g));
                    triplets.push((j, j, g));
                    triplets.push((i, j, -g));
                }
                (Net::Unknown(i), Net::Fixed(f)) | (Net::Fixed(f), Net::Unknown(i)) => {
                    triplets.push((i, i, g));
                    src[i] += g * fixed[f].potential;
                }
                _ => {}
            }
        }
        let g = SymMatrix::from_triplets(n, &triplets);

        let mut c = vec![0.0; n];
        for cap in &self.capacitors {
            if let Net::Unknown(k) = node_net[cap.node.0] {
                c[k] += cap.farads;
            }
        }
        for ex in &self.excitations {
            if let Excitation::Current { node, amps } = *ex {
                if let Net::Unknown(k) = node_net[node.0] {
                    src[k] += amps;
                }
            }
        }

        for (k, probe) in self.probes.iter().enumerate() {
            self.check_probe(k, probe, &node_net)?;
        }

        Ok(NodalSystem {
            netlist: self.clone(),
            node_net,
            unknown_members,
            fixed,
            g,
            c,
            src,
        })
    }

    fn check_probe(&self, k: usize, probe: &Probe, node_net: &[Net]) -> Result<()> {
        let br = self.branches.get(probe.branch).ok_or_else(|| {
            Error::invalid(format!("probe {k} refers to unknown branch {}", probe.branch))
        })?;
        let mut inside = vec![false; self.labels.len()];
        for &n in &probe.side {
            self.check_node(n, "probe")?;
            inside[n.0] = true;
        }
        if inside[br.a.0] == inside[br.b.0] {
            return Err(Error::invalid(format!(
                "probe {k}: branch {} does not cross the probe boundary",
                probe.branch
            )));
        }
        if br.is_short() {
            for (e, other) in self.branches.iter().enumerate() {
                if e != probe.branch && other.is_short() && inside[other.a.0] != inside[other.b.0] {
                    return Err(Error::invalid(format!(
                        "probe {k}: short {e} also crosses the boundary, current is ambiguous"
                    )));
                }
            }
            if probe.side.iter().any(|n| matches!(node_net[n.0], Net::Fixed(f) if f > 0)) {
                return Err(Error::invalid(format!(
                    "probe {k}: side contains a voltage-source node"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Net {
    Unknown(usize),
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
struct FixedNet {
    potential: f64,
    source: Option<usize>,
    members: Vec<NodeId>,
}

/// Assembled linear system `G·v + C·dv/dt = src` over the unknown nets.
#[derive(Debug, Clone)]
pub struct NodalSystem {
    netlist: Netlist,
    node_net: Vec<Net>,
    unknown_members: Vec<Vec<NodeId>>,
    fixed: Vec<FixedNet>,
    g: SymMatrix,
    c: Vec<f64>,
    src: Vec<f64>,
}

impl NodalSystem {
    /// Number of unknown node voltages.
    pub fn node_count(&self) -> usize {
        self.c.len()
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn conductance_matrix(&self) -> &SymMatrix {
        &self.g
    }

    /// Diagonal of the capacitance matrix.
    pub fn capacitance(&self) -> &[f64] {
        &self.c
    }

    pub fn sources(&self) -> &[f64] {
        &self.src
    }

    pub fn net_of(&self, node: NodeId) -> Net {
        self.node_net[node.0]
    }

    /// Label of the first physical node merged into unknown `k`.
    pub fn unknown_label(&self, k: usize) -> String {
        let members = &self.unknown_members[k];
        let first = &self.netlist.labels[members[0].0];
        if members.len() > 1 {
            format!("{first} (+{} merged)", members.len() - 1)
        } else {
            first.to_string()
        }
    }

    pub fn probe_count(&self) -> usize {
        self.netlist.probes.len()
    }

    /// True if any unknown net carries capacitance.
    pub fn is_dynamic(&self) -> bool {
        self.c.iter().any(|&c| c > 0.0)
    }

    /// Capacitance attached directly to voltage-source nets, weighted by the
    /// square of the source voltage: the energy an ideal step spends charging
    /// it.
    pub fn pinned_step_energy(&self) -> f64 {
        self.netlist
            .capacitors
            .iter()
            .filter_map(|cap| match self.node_net[cap.node.0] {
                Net::Fixed(f) if f > 0 => Some(cap.farads * self.fixed[f].potential.powi(2)),
                _ => None,
            })
            .sum()
    }

    /// Expands unknown-net values to every physical node; pinned nets take
    /// their source potential times `fixed_scale`.
    pub fn node_potentials<T: Scalar>(&self, unknowns: &[T], fixed_scale: f64) -> Vec<T> {
        self.node_net
            .iter()
            .map(|net| match *net {
                Net::Unknown(k) => unknowns[k],
                Net::Fixed(f) => T::from_real(self.fixed[f].potential * fixed_scale),
            })
            .collect()
    }

    /// Splits per-net capacitor currents among the physical capacitors of
    /// each unknown net in proportion to capacitance.
    pub fn split_net_cap_currents<T: Scalar>(&self, net_currents: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.netlist.labels.len()];
        for cap in &self.netlist.capacitors {
            if let Net::Unknown(k) = self.node_net[cap.node.0] {
                if self.c[k] > 0.0 {
                    out[cap.node.0] += net_currents[k] * T::from_real(cap.farads / self.c[k]);
                }
            }
        }
        out
    }

    /// Capacitor currents `jω·c·v` per physical node for a phasor solution.
    pub fn phasor_cap_currents<T: Scalar>(&self, potentials: &[T], j_omega: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.netlist.labels.len()];
        for cap in &self.netlist.capacitors {
            out[cap.node.0] += j_omega * T::from_real(cap.farads) * potentials[cap.node.0];
        }
        out
    }

    /// Current through every branch from `a` to `b`; `None` for shorts.
    pub fn branch_currents<T: Scalar>(&self, potentials: &[T]) -> Vec<Option<T>> {
        self.netlist
            .branches
            .iter()
            .map(|br| {
                (!br.is_short()).then(|| {
                    (potentials[br.a.0] - potentials[br.b.0]) * T::from_real(br.conductance())
                })
            })
            .collect()
    }

    fn injection<T: Scalar>(&self, node: NodeId, scale: f64) -> T {
        self.netlist
            .excitations
            .iter()
            .filter_map(|ex| match *ex {
                Excitation::Current { node: n, amps } if n == node => {
                    Some(T::from_real(amps * scale))
                }
                _ => None,
            })
            .fold(T::zero(), |acc, v| acc + v)
    }

    /// Probe currents given physical potentials and capacitor currents.
    /// `source_scale` multiplies every excitation value (0 before a step,
    /// 1 after it, 1 for phasor amplitudes).
    pub fn probe_currents<T: Scalar>(
        &self,
        potentials: &[T],
        cap_currents: &[T],
        source_scale: f64,
    ) -> Vec<T> {
        let branches = &self.netlist.branches;
        self.netlist
            .probes
            .iter()
            .map(|probe| {
                let br = &branches[probe.branch];
                let mut inside = vec![false; potentials.len()];
                for n in &probe.side {
                    inside[n.0] = true;
                }
                if !br.is_short() {
                    let i_ab = (potentials[br.a.0] - potentials[br.b.0])
                        * T::from_real(br.conductance());
                    return if inside[br.a.0] { i_ab } else { -i_ab };
                }
                // KCL over the side: what is injected and not stored or
                // carried away by other branches leaves through the probe
                let mut total = T::zero();
                for n in &probe.side {
                    total += self.injection::<T>(*n, source_scale) - cap_currents[n.0];
                }
                for (e, other) in branches.iter().enumerate() {
                    if e == probe.branch || inside[other.a.0] == inside[other.b.0] {
                        continue;
                    }
                    let i_ab = (potentials[other.a.0] - potentials[other.b.0])
                        * T::from_real(other.conductance());
                    total -= if inside[other.a.0] { i_ab } else { -i_ab };
                }
                total
            })
            .collect()
    }

    /// Current delivered by each excitation into the network.
    pub fn excitation_currents<T: Scalar>(
        &self,
        potentials: &[T],
        cap_currents: &[T],
        source_scale: f64,
    ) -> Vec<T> {
        let branches = &self.netlist.branches;
        self.netlist
            .excitations
            .iter()
            .enumerate()
            .map(|(idx, ex)| match *ex {
                Excitation::Current { amps, .. } => T::from_real(amps * source_scale),
                Excitation::Voltage { .. } => {
                    let f = self
                        .fixed
                        .iter()
                        .position(|fx| fx.source == Some(idx))
                        .expect("every voltage source owns a pinned net");
                    let in_net = |n: NodeId| self.node_net[n.0] == Net::Fixed(f);
                    let mut total = T::zero();
                    for &m in &self.fixed[f].members {
                        total += cap_currents[m.0] - self.injection::<T>(m, source_scale);
                    }
                    for br in branches.iter().filter(|b| !b.is_short()) {
                        let (a_in, b_in) = (in_net(br.a), in_net(br.b));
                        if a_in == b_in {
                            continue;
                        }
                        let i_ab = (potentials[br.a.0] - potentials[br.b.0])
                            * T::from_real(br.conductance());
                        total += if a_in { i_ab } else { -i_ab };
                    }
                    total
                }
            })
            .collect()
    }

    /// Total instantaneous power delivered by all excitations.
    pub fn source_power(&self, potentials: &[f64], cap_currents: &[f64], source_scale: f64) -> f64 {
        let currents = self.excitation_currents(potentials, cap_currents, source_scale);
        self.netlist
            .excitations
            .iter()
            .zip(currents)
            .map(|(ex, i)| match *ex {
                Excitation::Voltage { volts, .. } => volts * source_scale * i,
                Excitation::Current { node, .. } => potentials[node.0] * i,
            })
            .sum()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller index as root so ground stays a root
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

// ---------------------------------------------------------------------------
// Crossbar layout
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveMode {
    Voltage,
    Current,
}

impl fmt::Display for DriveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriveMode::Voltage => "voltage",
            DriveMode::Current => "current",
        })
    }
}

/// Wire and terminal parasitics of a crossbar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parasitics {
    /// Resistance of one wire segment between adjacent junctions (Ω).
    pub r_p: f64,
    /// Capacitance from every junction node to ground (F).
    pub c_p: f64,
    /// Terminal resistance at the bottom of every column (Ω).
    pub r_t: f64,
}

impl Parasitics {
    pub const IDEAL: Parasitics = Parasitics {
        r_p: 0.0,
        c_p: 0.0,
        r_t: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("r_p", self.r_p)?;
        ensure_non_negative("c_p", self.c_p)?;
        ensure_non_negative("r_t", self.r_t)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossbarConfig {
    pub device: MemristorDevice,
    /// Memristor conductances, `n_rows × n_cols` (S).
    pub conductances: Grid,
    pub parasitics: Parasitics,
    pub mode: DriveMode,
    /// Series resistance of each row's voltage supply (Ω); zero is ideal.
    /// Ignored in current mode.
    #[serde(default)]
    pub source_resistance: f64,
}

impl CrossbarConfig {
    pub fn new(
        device: MemristorDevice,
        conductances: Grid,
        parasitics: Parasitics,
        mode: DriveMode,
    ) -> Result<Self> {
        let cfg = Self {
            device,
            conductances,
            parasitics,
            mode,
            source_resistance: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_rows(&self) -> usize {
        self.conductances.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.conductances.cols()
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.parasitics.validate()?;
        ensure_non_negative("source_resistance", self.source_resistance)?;
        for i in 0..self.n_rows() {
            for j in 0..self.n_cols() {
                let g = self.conductances.get(i, j);
                if !g.is_finite() || !self.device.contains(g) {
                    return Err(Error::invalid(format!(
                        "conductance g[{i}][{j}] = {g:e} S is outside the device range [{:e}, {:e}] S",
                        self.device.g_off, self.device.g_on
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Physical node indices of a laid-out crossbar.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarLayout {
    pub n_rows: usize,
    pub n_cols: usize,
    pub mode: DriveMode,
    pub supply: Vec<Option<NodeId>>,
    pub drive: Vec<NodeId>,
    row_nodes: Vec<NodeId>,
    col_nodes: Vec<NodeId>,
}

impl CrossbarLayout {
    pub fn row_node(&self, i: usize, j: usize) -> NodeId {
        self.row_nodes[i * self.n_cols + j]
    }

    pub fn col_node(&self, i: usize, j: usize) -> NodeId {
        self.col_nodes[i * self.n_cols + j]
    }

    pub fn junction_node_count(&self) -> usize {
        self.row_nodes.len() + self.col_nodes.len()
    }
}

/// Crossbar circuit without its drive.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarTopology {
    pub netlist: Netlist,
    pub layout: CrossbarLayout,
}

impl CrossbarTopology {
    pub fn memristor_count(&self) -> usize {
        self.count_branches(|k| matches!(k, BranchKind::Memristor { .. }))
    }

    pub fn wire_segment_count(&self) -> usize {
        self.count_branches(|k| {
            matches!(k, BranchKind::RowWire { .. } | BranchKind::ColumnWire { .. })
        })
    }

    pub fn capacitor_count(&self) -> usize {
        self.netlist.capacitors.len()
    }

    fn count_branches(&self, pred: impl Fn(&BranchKind) -> bool) -> usize {
        self.netlist.branches.iter().filter(|b| pred(&b.kind)).count()
    }
}

/// Lays out the crossbar graph.
///
/// Row `i` is driven at its left end; one `r_p` segment joins the drive
/// terminal to junction `(i, 0)` and one joins each adjacent pair of
/// junctions, so the far junction sits `n_cols` segments from the drive.
/// Column `j` runs top to bottom with `r_p` between adjacent junctions and
/// `r_t` from junction `(n_rows-1, j)` to ground. Every junction node gets
/// `c_p` to ground. Nodes are numbered junction by junction (row node, then
/// column node) so the assembled matrix stays narrowly banded.
pub fn build_topology(cfg: &CrossbarConfig) -> Result<CrossbarTopology> {
    cfg.validate()?;
    let (n_rows, n_cols) = (cfg.n_rows(), cfg.n_cols());
    let Parasitics { r_p, c_p, r_t } = cfg.parasitics;

    let mut net = Netlist::new();
    let mut supply = Vec::with_capacity(n_rows);
    let mut drive = Vec::with_capacity(n_rows);
    let mut row_nodes = Vec::with_capacity(n_rows * n_cols);
    let mut col_nodes = Vec::with_capacity(n_rows * n_cols);

    for i in 0..n_rows {
        let s = (cfg.mode == DriveMode::Voltage).then(|| net.add_node(NodeLabel::Supply { row: i }));
        let d = net.add_node(NodeLabel::Drive { row: i });
        if let Some(s) = s {
            net.add_resistor(s, d, cfg.source_resistance, BranchKind::SourceResistance { row: i });
        }
        supply.push(s);
        drive.push(d);
        for j in 0..n_cols {
            row_nodes.push(net.add_node(NodeLabel::Row { row: i, col: j }));
            col_nodes.push(net.add_node(NodeLabel::Column { row: i, col: j }));
        }
    }

    let at = |i: usize, j: usize| i * n_cols + j;
    for i in 0..n_rows {
        net.add_resistor(drive[i], row_nodes[at(i, 0)], r_p, BranchKind::RowWire { row: i, segment: 0 });
        for j in 1..n_cols {
            net.add_resistor(
                row_nodes[at(i, j - 1)],
                row_nodes[at(i, j)],
                r_p,
                BranchKind::RowWire { row: i, segment: j },
            );
        }
        for j in 0..n_cols {
            net.add_resistor(
                row_nodes[at(i, j)],
                col_nodes[at(i, j)],
                1.0 / cfg.conductances.get(i, j),
                BranchKind::Memristor { row: i, col: j },
            );
        }
    }
    for j in 0..n_cols {
        for i in 1..n_rows {
            net.add_resistor(
                col_nodes[at(i - 1, j)],
                col_nodes[at(i, j)],
                r_p,
                BranchKind::ColumnWire { col: j, segment: i - 1 },
            );
        }
        let t = net.add_resistor(
            col_nodes[at(n_rows - 1, j)],
            NodeId::GROUND,
            r_t,
            BranchKind::Terminal { col: j },
        );
        let side = (0..n_rows).map(|i| col_nodes[at(i, j)]).collect();
        net.add_probe(format!("column[{j}]"), t, side);
    }
    for (&r, &c) in row_nodes.iter().zip(&col_nodes) {
        net.add_capacitor(r, c_p);
        net.add_capacitor(c, c_p);
    }

    Ok(CrossbarTopology {
        netlist: net,
        layout: CrossbarLayout {
            n_rows,
            n_cols,
            mode: cfg.mode,
            supply,
            drive,
            row_nodes,
            col_nodes,
        },
    })
}

/// Attaches the row drive and assembles the nodal system. Voltage-mode
/// entries are volts, current-mode entries amperes.
pub fn assemble(topology: &CrossbarTopology, drive: &[f64]) -> Result<NodalSystem> {
    let layout = &topology.layout;
    if drive.len() != layout.n_rows {
        return Err(Error::DimensionMismatch {
            what: "drive vector",
            expected: layout.n_rows,
            found: drive.len(),
        });
    }
    let mut net = topology.netlist.clone();
    for (i, &value) in drive.iter().enumerate() {
        match (layout.mode, layout.supply[i]) {
            (DriveMode::Voltage, Some(s)) => net.add_voltage_source(s, value),
            _ => net.add_current_source(layout.drive[i], value),
        }
    }
    net.assemble()
}

/// [`build_topology`] followed by [`assemble`].
pub fn build_system(cfg: &CrossbarConfig, drive: &[f64]) -> Result<NodalSystem> {
    assemble(&build_topology(cfg)?, drive)
}
