//! Benchmark model generators: Hallway grids, RockSample and two toy models.

use thiserror::Error;

use crate::model::{determinize_observations, normalize_order, Distribution, Pomdp, RawPomdp, INIT_OBSERVATION};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchmarkError {
    #[error("empty map")]
    EmptyMap,
    #[error("map row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("unknown map cell '{ch}' at row {row}, column {col}")]
    UnknownCell { ch: char, row: usize, col: usize },
    #[error("map has no start cell")]
    NoStart,
    #[error("map has no goal cell")]
    NoGoal,
    #[error("unknown built-in layout '{0}'")]
    UnknownLayout(String),
    #[error("movement probabilities must be non-negative and sum to 1")]
    BadNoise,
    #[error("observation noise must lie in [0, 1]")]
    BadObservationNoise,
    #[error("rock {0} lies outside the grid")]
    RockOutOfGrid(usize),
    #[error("two rocks share cell ({0}, {1})")]
    DuplicateRock(usize, usize),
    #[error("start cell lies outside the grid")]
    StartOutOfGrid,
    #[error("too many rocks: {0} (at most 16)")]
    TooManyRocks(usize),
}

// ---------------------------------------------------------------------------
// Hallway

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Wall,
    Free,
    Start,
    Reload,
    Trap,
    Goal,
}

impl Cell {
    fn from_char(ch: char) -> Option<Cell> {
        Some(match ch {
            '#' => Cell::Wall,
            '.' => Cell::Free,
            '+' => Cell::Start,
            'R' => Cell::Reload,
            'X' => Cell::Trap,
            'G' => Cell::Goal,
            _ => return None,
        })
    }

    fn is_open(self) -> bool {
        matches!(self, Cell::Free | Cell::Start | Cell::Reload)
    }
}

/// Outcome probabilities of a forward move. Slips move sideways without
/// turning; `stay` leaves the robot in place. Turns are always exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveNoise {
    pub forward: f64,
    pub slip_left: f64,
    pub slip_right: f64,
    pub stay: f64,
}

impl MoveNoise {
    pub const EXACT: MoveNoise = MoveNoise { forward: 1.0, slip_left: 0.0, slip_right: 0.0, stay: 0.0 };
    pub const CLASSIC: MoveNoise = MoveNoise { forward: 0.8, slip_left: 0.05, slip_right: 0.05, stay: 0.1 };

    fn is_valid(&self) -> bool {
        let ps = [self.forward, self.slip_left, self.slip_right, self.stay];
        ps.iter().all(|&p| p >= 0.0) && (ps.iter().sum::<f64>() - 1.0).abs() < 1e-9
    }
}

impl Default for MoveNoise {
    fn default() -> Self {
        MoveNoise::EXACT
    }
}

/// Headings in clockwise order.
const HEADINGS: [char; 4] = ['N', 'E', 'S', 'W'];
const HALLWAY_ACTIONS: [&str; 4] = ["forward", "turn-left", "turn-right", "turn-around"];

#[derive(Debug, Clone, PartialEq)]
pub struct Hallway {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Cell>,
    pub capacity: u32,
    pub noise: MoveNoise,
    /// Probability that a wall pattern is replaced by a uniformly random one.
    pub observation_noise: f64,
}

impl Hallway {
    /// Parses a map with one character per cell: `#` wall, `.` free, `+` start,
    /// `R` reload, `X` trap, `G` goal. Whitespace-only lines are skipped;
    /// leading and trailing blanks are trimmed.
    pub fn parse(map: &str, capacity: u32) -> Result<Self, BenchmarkError> {
        let lines: Vec<&str> = map.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if lines.is_empty() {
            return Err(BenchmarkError::EmptyMap);
        }
        let cols = lines[0].chars().count();
        let mut cells = Vec::with_capacity(lines.len() * cols);
        for (row, line) in lines.iter().enumerate() {
            let found = line.chars().count();
            if found != cols {
                return Err(BenchmarkError::Ragged { row, expected: cols, found });
            }
            for (col, ch) in line.chars().enumerate() {
                cells.push(Cell::from_char(ch).ok_or(BenchmarkError::UnknownCell { ch, row, col })?);
            }
        }
        if !cells.contains(&Cell::Start) {
            return Err(BenchmarkError::NoStart);
        }
        if !cells.contains(&Cell::Goal) {
            return Err(BenchmarkError::NoGoal);
        }
        Ok(Hallway { rows: lines.len(), cols, cells, capacity, noise: MoveNoise::EXACT, observation_noise: 0.0 })
    }

    /// One of the built-in layouts `5x5`, `6x6`, `8x8`, `10x10`.
    pub fn builtin(name: &str, capacity: u32) -> Result<Self, BenchmarkError> {
        let map = hallway_layout(name).ok_or_else(|| BenchmarkError::UnknownLayout(name.to_string()))?;
        Self::parse(map, capacity)
    }

    pub fn with_noise(mut self, noise: MoveNoise) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_observation_noise(mut self, eps: f64) -> Self {
        self.observation_noise = eps;
        self
    }

    fn cell(&self, r: isize, c: isize) -> Cell {
        if r < 0 || c < 0 || r as usize >= self.rows || c as usize >= self.cols {
            Cell::Wall
        } else {
            self.cells[r as usize * self.cols + c as usize]
        }
    }

    fn step(r: usize, c: usize, heading: usize) -> (isize, isize) {
        let (dr, dc) = [(-1, 0), (0, 1), (1, 0), (0, -1)][heading % 4];
        (r as isize + dr, c as isize + dc)
    }

    /// Wall bits `front right back left` seen from `(r, c)` facing `heading`.
    fn pattern(&self, r: usize, c: usize, heading: usize) -> usize {
        (0..4).fold(0, |acc, k| {
            let (nr, nc) = Self::step(r, c, heading + k);
            let wall = self.cell(nr, nc) == Cell::Wall;
            acc | ((wall as usize) << (3 - k))
        })
    }

    pub fn generate(&self) -> Result<Pomdp, BenchmarkError> {
        if !self.noise.is_valid() {
            return Err(BenchmarkError::BadNoise);
        }
        if !(0.0..=1.0).contains(&self.observation_noise) {
            return Err(BenchmarkError::BadObservationNoise);
        }

        // State layout: four headings per open cell, one absorbing state per
        // goal or trap cell, in row-major order.
        let mut names = Vec::new();
        let mut id = vec![[usize::MAX; 4]; self.cells.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                let i = r * self.cols + c;
                match self.cells[i] {
                    cell if cell.is_open() => {
                        for h in 0..4 {
                            id[i][h] = names.len();
                            names.push(format!("r{r}c{c}{}", HEADINGS[h]));
                        }
                    }
                    Cell::Goal | Cell::Trap => {
                        id[i] = [names.len(); 4];
                        let tag = if self.cells[i] == Cell::Goal { 'G' } else { 'X' };
                        names.push(format!("r{r}c{c}{tag}"));
                    }
                    _ => {}
                }
            }
        }
        let n = names.len();

        // Observations: 16 plain patterns, 16 reload patterns, goal, trap.
        let mut obs_names: Vec<String> = (0..16).map(|p| format!("w{p:04b}")).collect();
        obs_names.extend((0..16).map(|p| format!("r{p:04b}")));
        obs_names.push("goal".into());
        obs_names.push("trap".into());
        let goal_obs = 32;
        let trap_obs = 33;

        let mut transitions = vec![Vec::new(); n];
        let mut observation = vec![Vec::new(); n];
        let mut targets = vec![false; n];
        for r in 0..self.rows {
            for c in 0..self.cols {
                let i = r * self.cols + c;
                let cell = self.cells[i];
                match cell {
                    Cell::Goal | Cell::Trap => {
                        let s = id[i][0];
                        transitions[s] = vec![vec![(s, 1.0)]; 4];
                        let z = if cell == Cell::Goal { goal_obs } else { trap_obs };
                        observation[s] = vec![vec![(z, 1.0)]; 4];
                        targets[s] = cell == Cell::Goal;
                    }
                    cell if cell.is_open() => {
                        for h in 0..4 {
                            let s = id[i][h];
                            let dest = |heading: usize| -> usize {
                                let (nr, nc) = Self::step(r, c, heading);
                                match self.cell(nr, nc) {
                                    Cell::Wall => s,
                                    _ => {
                                        let j = nr as usize * self.cols + nc as usize;
                                        id[j][h]
                                    }
                                }
                            };
                            let fwd = vec![
                                (dest(h), self.noise.forward),
                                (dest(h + 3), self.noise.slip_left),
                                (dest(h + 1), self.noise.slip_right),
                                (s, self.noise.stay),
                            ];
                            let fwd: Distribution =
                                normalize_order(fwd.into_iter().filter(|&(_, p)| p > 0.0).collect());
                            transitions[s] = vec![
                                fwd,
                                vec![(id[i][(h + 3) % 4], 1.0)],
                                vec![(id[i][(h + 1) % 4], 1.0)],
                                vec![(id[i][(h + 2) % 4], 1.0)],
                            ];
                            let base = if cell == Cell::Reload { 16 } else { 0 };
                            let exact = base + self.pattern(r, c, h);
                            let eps = self.observation_noise;
                            let dist: Distribution = if eps > 0.0 {
                                normalize_order(
                                    (0..16)
                                        .map(|p| {
                                            (base + p, eps / 16.0 + if base + p == exact { 1.0 - eps } else { 0.0 })
                                        })
                                        .collect(),
                                )
                            } else {
                                vec![(exact, 1.0)]
                            };
                            observation[s] = vec![dist; 4];
                        }
                    }
                    _ => {}
                }
            }
        }

        let starts: Vec<usize> =
            (0..self.cells.len()).filter(|&i| self.cells[i] == Cell::Start).flat_map(|i| id[i]).collect();
        let p0 = 1.0 / starts.len() as f64;
        let cap = self.capacity as i64;
        let energy_row: Vec<i64> = (0..obs_names.len())
            .map(|z| match z {
                16..=31 => cap,
                _ if z == goal_obs => 0,
                _ => -1,
            })
            .collect();

        let raw = RawPomdp {
            states: names,
            actions: HALLWAY_ACTIONS.iter().map(|s| s.to_string()).collect(),
            observations: obs_names,
            transitions,
            observation,
            initial: normalize_order(starts.into_iter().map(|s| (s, p0)).collect()),
            cost: vec![vec![1; 4]; n],
            energy: vec![energy_row; 4],
            capacity: self.capacity,
            targets,
        };
        // Start cells are ordinary cells: the first move drains energy too.
        Ok(prune_observations(determinize_with_init_energy(&raw, -1)))
    }
}

/// Determinizes and sets the energy effect of the artificial initial
/// observation.
fn determinize_with_init_energy(raw: &RawPomdp, init_energy: i64) -> Pomdp {
    let mut m = determinize_observations(raw);
    if let Some(z) = m.observations.iter().position(|o| o == INIT_OBSERVATION) {
        for row in &mut m.energy {
            row[z] = init_energy;
        }
    }
    m
}

/// Drops observations no state emits and renumbers the rest.
fn prune_observations(mut m: Pomdp) -> Pomdp {
    let mut used = vec![false; m.observations.len()];
    for &z in &m.observation {
        used[z] = true;
    }
    let mut remap = vec![usize::MAX; used.len()];
    let mut next = 0;
    for z in 0..used.len() {
        if used[z] {
            remap[z] = next;
            next += 1;
        }
    }
    m.observations = m.observations.iter().enumerate().filter(|(z, _)| used[*z]).map(|(_, o)| o.clone()).collect();
    for row in &mut m.energy {
        *row = row.iter().enumerate().filter(|(z, _)| used[*z]).map(|(_, &e)| e).collect();
    }
    for z in &mut m.observation {
        *z = remap[*z];
    }
    m
}

const HALLWAY_5X5: &str = "
X...#
G##.#
.++##
XR...
#.###
";

const HALLWAY_6X6: &str = "
..+#..
.R..#.
#...GX
#+.#.#
#.##R#
X##.#.
";

const HALLWAY_8X8: &str = "
#..#+..+
#X#....#
#...R.X.
#.R.##.#
##.G###.
..#.+R.#
...#...#
...##.##
";

const HALLWAY_10X10: &str = "
+.#.###..#
...+##....
#.#...#...
..#####.##
........#.
X....##.#.
X###R+...#
.###...#..
...R..G.R#
#R#....#..
";

/// Text of a built-in Hallway layout.
pub fn hallway_layout(name: &str) -> Option<&'static str> {
    match name {
        "5x5" => Some(HALLWAY_5X5),
        "6x6" => Some(HALLWAY_6X6),
        "8x8" => Some(HALLWAY_8X8),
        "10x10" => Some(HALLWAY_10X10),
        _ => None,
    }
}

pub const HALLWAY_LAYOUTS: [&str; 4] = ["5x5", "6x6", "8x8", "10x10"];

/// Capacity used for a built-in layout unless overridden.
pub fn hallway_default_capacity(name: &str) -> u32 {
    if name == "10x10" {
        15
    } else {
        10
    }
}

// ---------------------------------------------------------------------------
// RockSample

/// RockSample[n, k] with energy: moving drains one unit, sampling drains two,
/// checking is free, and sampling a good rock refuels completely. Every action
/// costs 1. Leaving the grid eastwards reaches the exit, the only target.
#[derive(Debug, Clone, PartialEq)]
pub struct RockSample {
    pub size: usize,
    /// Rock cells as `(x, y)`.
    pub rocks: Vec<(usize, usize)>,
    pub start: (usize, usize),
    pub capacity: u32,
    /// Distance at which a check is correct with probability 0.75.
    pub half_efficiency: f64,
    /// Prior probability that a rock is good.
    pub good_prior: f64,
}

impl RockSample {
    /// Standard instance: rocks on a fixed pseudo-random pattern, start on the
    /// west edge, middle row.
    pub fn standard(size: usize, num_rocks: usize, capacity: u32) -> Self {
        let mut rocks = Vec::with_capacity(num_rocks);
        let start = (0, size / 2);
        let mut k = 0usize;
        while rocks.len() < num_rocks && k < 4 * size * size {
            let idx = (k * 7 + 3) % (size * size);
            let (x, y) = (idx % size, idx / size);
            let start_ok = size * size <= num_rocks;
            if ((x, y) != start || start_ok) && !rocks.contains(&(x, y)) {
                rocks.push((x, y));
            }
            k += 1;
        }
        RockSample { size, rocks, start, capacity, half_efficiency: size as f64 / 2.0, good_prior: 0.5 }
    }

    fn check(&self) -> Result<(), BenchmarkError> {
        let k = self.rocks.len();
        if k > 16 {
            return Err(BenchmarkError::TooManyRocks(k));
        }
        for (i, &(x, y)) in self.rocks.iter().enumerate() {
            if x >= self.size || y >= self.size {
                return Err(BenchmarkError::RockOutOfGrid(i));
            }
            if self.rocks[..i].contains(&(x, y)) {
                return Err(BenchmarkError::DuplicateRock(x, y));
            }
        }
        if self.start.0 >= self.size || self.start.1 >= self.size {
            return Err(BenchmarkError::StartOutOfGrid);
        }
        Ok(())
    }

    /// Probability that checking rock `i` from `(x, y)` reports its true quality.
    pub fn check_accuracy(&self, i: usize, x: usize, y: usize) -> f64 {
        let (rx, ry) = self.rocks[i];
        let d = ((rx as f64 - x as f64).powi(2) + (ry as f64 - y as f64).powi(2)).sqrt();
        0.5 + 0.5 * 2f64.powf(-d / self.half_efficiency)
    }

    pub fn generate_raw(&self) -> Result<RawPomdp, BenchmarkError> {
        self.check()?;
        let n = self.size;
        let k = self.rocks.len();
        let masks = 1usize << k;
        // Regular states (x, y, mask), then refuel copies (rock i, mask without
        // bit i) entered right after sampling a good rock, then the exit.
        let regular = |x: usize, y: usize, m: usize| (y * n + x) * masks + m;
        let num_regular = n * n * masks;
        let refuel = |i: usize, m: usize| num_regular + i * masks + m;
        let exit = num_regular + k * masks;
        let num_states = exit + 1;

        let mut actions: Vec<String> =
            ["north", "south", "east", "west", "sample"].iter().map(|s| s.to_string()).collect();
        actions.extend((0..k).map(|i| format!("check{i}")));
        let na = actions.len();
        let observations: Vec<String> = ["none", "good", "bad", "fuel", "exit"].iter().map(|s| s.to_string()).collect();
        const NONE: usize = 0;
        const GOOD: usize = 1;
        const BAD: usize = 2;
        const FUEL: usize = 3;
        const EXIT: usize = 4;

        let mut names = vec![String::new(); num_states];
        let mut transitions = vec![Vec::new(); num_states];
        let mut observation = vec![Vec::new(); num_states];
        let mask_str = |m: usize| (0..k).map(|i| if m >> i & 1 == 1 { 'G' } else { 'B' }).collect::<String>();

        let rows_for = |x: usize, y: usize, m: usize| -> Vec<Distribution> {
            let mut rows = Vec::with_capacity(na);
            let here = regular(x, y, m);
            rows.push(vec![(if y > 0 { regular(x, y - 1, m) } else { here }, 1.0)]);
            rows.push(vec![(if y + 1 < n { regular(x, y + 1, m) } else { here }, 1.0)]);
            rows.push(vec![(if x + 1 < n { regular(x + 1, y, m) } else { exit }, 1.0)]);
            rows.push(vec![(if x > 0 { regular(x - 1, y, m) } else { here }, 1.0)]);
            let sample = match self.rocks.iter().position(|&r| r == (x, y)) {
                Some(i) if m >> i & 1 == 1 => refuel(i, m & !(1 << i)),
                _ => here,
            };
            rows.push(vec![(sample, 1.0)]);
            for _ in 0..k {
                rows.push(vec![(here, 1.0)]);
            }
            rows
        };
        let obs_for = |x: usize, y: usize, m: usize, z_default: usize| -> Vec<Distribution> {
            let mut rows = vec![vec![(z_default, 1.0)]; 5];
            for i in 0..k {
                let acc = self.check_accuracy(i, x, y);
                let (zt, zf) = if m >> i & 1 == 1 { (GOOD, BAD) } else { (BAD, GOOD) };
                rows.push(normalize_order(
                    [(zt, acc), (zf, 1.0 - acc)].into_iter().filter(|&(_, p)| p > 0.0).collect(),
                ));
            }
            rows
        };

        for y in 0..n {
            for x in 0..n {
                for m in 0..masks {
                    let s = regular(x, y, m);
                    names[s] = format!("x{x}y{y}{}", mask_str(m));
                    transitions[s] = rows_for(x, y, m);
                    observation[s] = obs_for(x, y, m, NONE);
                }
            }
        }
        for (i, &(x, y)) in self.rocks.iter().enumerate() {
            for m in 0..masks {
                let s = refuel(i, m);
                names[s] = format!("x{x}y{y}{}+", mask_str(m));
                transitions[s] = rows_for(x, y, m);
                observation[s] = obs_for(x, y, m, FUEL);
            }
        }
        names[exit] = "exit".into();
        transitions[exit] = vec![vec![(exit, 1.0)]; na];
        observation[exit] = vec![vec![(EXIT, 1.0)]; na];

        let mut initial = Vec::new();
        for m in 0..masks {
            let good = m.count_ones() as i32;
            let p = self.good_prior.powi(good) * (1.0 - self.good_prior).powi(k as i32 - good);
            if p > 0.0 {
                initial.push((regular(self.start.0, self.start.1, m), p));
            }
        }
        let cap = self.capacity as i64;
        let energy = (0..na)
            .map(|a| {
                let drain = match a {
                    0..=3 => -1,
                    4 => -2,
                    _ => 0,
                };
                (0..observations.len())
                    .map(|z| match z {
                        FUEL => cap,
                        EXIT => 0,
                        _ => drain,
                    })
                    .collect()
            })
            .collect();
        let mut targets = vec![false; num_states];
        targets[exit] = true;
        Ok(RawPomdp {
            states: names,
            actions,
            observations,
            transitions,
            observation,
            initial: normalize_order(initial),
            cost: vec![vec![1; na]; num_states],
            energy,
            capacity: self.capacity,
            targets,
        })
    }

    /// The generated model with observations folded into the states.
    pub fn generate(&self) -> Result<Pomdp, BenchmarkError> {
        let raw = self.generate_raw()?;
        let drains: Vec<i64> = raw.energy.iter().map(|row| row[0]).collect();
        let mut m = determinize_observations(&raw);
        if let Some(z) = m.observations.iter().position(|o| o == INIT_OBSERVATION) {
            for (a, row) in m.energy.iter_mut().enumerate() {
                row[z] = drains[a];
            }
        }
        Ok(m)
    }
}

// ---------------------------------------------------------------------------
// Toy models

pub mod toy {
    use crate::model::Pomdp;

    pub const TIGER_LISTEN: usize = 0;
    pub const TIGER_OPEN_LEFT: usize = 1;
    pub const TIGER_OPEN_RIGHT: usize = 2;
    pub const TIGER_RECHARGE: usize = 3;

    /// Tiger with a battery: listening drains one unit and is correct with
    /// probability 0.85, opening the tiger's door costs 100, and a charger room
    /// refills the battery.
    pub fn energy_tiger(capacity: u32) -> Pomdp {
        let names = [
            "tiger-left",
            "tiger-right",
            "tiger-left-hl",
            "tiger-left-hr",
            "tiger-right-hl",
            "tiger-right-hr",
            "charger-left",
            "charger-right",
            "done",
        ];
        let observations = ["start", "hear-left", "hear-right", "charger", "done"];
        let mut transitions = Vec::new();
        let mut cost = Vec::new();
        for s in 0..9 {
            let left = matches!(s, 0 | 2 | 3 | 6);
            let row: Vec<Vec<(usize, f64)>> = match s {
                8 => vec![vec![(8, 1.0)]; 4],
                6 | 7 => vec![vec![(if left { 0 } else { 1 }, 1.0)]; 4],
                _ => {
                    let listen = if left { vec![(2, 0.85), (3, 0.15)] } else { vec![(4, 0.15), (5, 0.85)] };
                    vec![listen, vec![(8, 1.0)], vec![(8, 1.0)], vec![(if left { 6 } else { 7 }, 1.0)]]
                }
            };
            transitions.push(row);
            let mut c = vec![1i64; 4];
            if s < 6 {
                c[if left { TIGER_OPEN_LEFT } else { TIGER_OPEN_RIGHT }] = 100;
            }
            cost.push(c);
        }
        let cap = capacity as i64;
        let energy = (0..4)
            .map(|a| {
                (0..5)
                    .map(|z| match z {
                        3 => cap,
                        0..=2 if a == TIGER_LISTEN => -1,
                        _ => 0,
                    })
                    .collect()
            })
            .collect();
        Pomdp {
            states: names.iter().map(|s| s.to_string()).collect(),
            actions: ["listen", "open-left", "open-right", "recharge"].iter().map(|s| s.to_string()).collect(),
            observations: observations.iter().map(|s| s.to_string()).collect(),
            transitions,
            observation: vec![0, 0, 1, 2, 1, 2, 3, 3, 4],
            initial: vec![(0, 0.5), (1, 0.5)],
            cost,
            energy,
            capacity,
            targets: (0..9).map(|s| s == 8).collect(),
        }
    }

    /// Fully observable corridor `c0 .. c{len-1}` with the goal at the end.
    /// Every step drains one unit except on the optional reload cell, which
    /// refills the resource.
    pub fn reload_corridor(len: usize, capacity: u32, reload_at: Option<usize>) -> Pomdp {
        assert!(len >= 2, "corridor needs at least two cells");
        let goal = len - 1;
        let transitions = (0..len)
            .map(|i| {
                if i == goal {
                    vec![vec![(i, 1.0)]; 2]
                } else {
                    vec![vec![(i + 1, 1.0)], vec![(i.saturating_sub(1), 1.0)]]
                }
            })
            .collect();
        let observation = (0..len)
            .map(|i| {
                if i == goal {
                    2
                } else if Some(i) == reload_at {
                    1
                } else {
                    0
                }
            })
            .collect();
        let cap = capacity as i64;
        Pomdp {
            states: (0..len).map(|i| format!("c{i}")).collect(),
            actions: vec!["forward".into(), "back".into()],
            observations: vec!["corridor".into(), "reload".into(), "goal".into()],
            transitions,
            observation,
            initial: vec![(0, 1.0)],
            cost: vec![vec![1, 1]; len],
            energy: vec![vec![-1, cap, 0]; 2],
            capacity,
            targets: (0..len).map(|i| i == goal).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_models_validate() {
        assert!(toy::energy_tiger(3).validate().is_empty());
        assert!(toy::reload_corridor(5, 3, Some(2)).validate().is_empty());
    }

    #[test]
    fn hallway_state_counts() {
        for (name, expected) in [("6x6", 83), ("8x8", 155)] {
            let m = Hallway::builtin(name, 10).unwrap().generate().unwrap();
            assert!(m.validate().is_empty());
            assert_eq!(m.num_states(), expected, "{name}");
        }
        let m = Hallway::builtin("5x5", 10).unwrap().generate().unwrap();
        assert!((41..=61).contains(&m.num_states()));
        assert_eq!(Hallway::builtin("10x10", 15).unwrap().generate().unwrap().num_states(), 259);
    }

    #[test]
    fn hallway_hand_count() {
        let m = Hallway::parse("+.\n.G", 3).unwrap().generate().unwrap();
        assert_eq!(m.num_states(), 13);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn rocksample_hand_count() {
        // One cell holding one rock: two rock qualities, one refuel copy, the exit.
        let raw = RockSample::standard(1, 1, 3).generate_raw().unwrap();
        assert_eq!(raw.num_states(), 2 + 2 + 1);
        let m = RockSample::standard(1, 1, 3).generate().unwrap();
        assert!(m.validate().is_empty());
    }

    #[test]
    fn hallway_observations_are_relative() {
        let h = Hallway::parse("+.G", 3).unwrap();
        let m = h.generate().unwrap();
        let name = |s: &str| m.observations[m.observation[m.state_index(s).unwrap()]].clone();
        // Facing east in the west corner: front open, right wall, back wall, left wall.
        assert_eq!(name("r0c0E"), "w0111");
        assert_eq!(name("r0c0N"), "w1011");
        let fwd = &m.transitions[m.state_index("r0c1E").unwrap()][0];
        assert_eq!(fwd, &vec![(m.state_index("r0c2G").unwrap(), 1.0)]);
    }

    #[test]
    fn hallway_noise_rows_sum_to_one() {
        let m = Hallway::builtin("5x5", 5).unwrap().with_noise(MoveNoise::CLASSIC).generate().unwrap();
        assert!(m.validate().is_empty());
        let m = Hallway::builtin("5x5", 5).unwrap().with_observation_noise(0.1).generate().unwrap();
        assert!(m.validate().is_empty());
        assert!(m.observations.iter().any(|o| o == INIT_OBSERVATION));
    }

    #[test]
    fn hallway_map_errors() {
        assert_eq!(Hallway::parse("", 3).unwrap_err(), BenchmarkError::EmptyMap);
        assert!(matches!(Hallway::parse("+.\n.", 3).unwrap_err(), BenchmarkError::Ragged { .. }));
        assert!(matches!(Hallway::parse("+?G", 3).unwrap_err(), BenchmarkError::UnknownCell { ch: '?', .. }));
        assert_eq!(Hallway::parse("..G", 3).unwrap_err(), BenchmarkError::NoStart);
    }

    #[test]
    fn rocksample_shape() {
        let rs = RockSample::standard(3, 4, 7);
        let raw = rs.generate_raw().unwrap();
        assert_eq!(raw.num_states(), 9 * 16 + 4 * 16 + 1);
        assert!(raw.validate().is_empty());
        let m = rs.generate().unwrap();
        assert!(m.validate().is_empty());
        assert!((348..=522).contains(&m.num_states()), "{}", m.num_states());
        assert!((rs.check_accuracy(0, rs.rocks[0].0, rs.rocks[0].1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rocksample_rejects_bad_rocks() {
        let mut rs = RockSample::standard(3, 2, 5);
        rs.rocks[1] = rs.rocks[0];
        assert!(matches!(rs.generate_raw().unwrap_err(), BenchmarkError::DuplicateRock(..)));
        rs.rocks[1] = (3, 0);
        assert_eq!(rs.generate_raw().unwrap_err(), BenchmarkError::RockOutOfGrid(1));
    }
}
