//! Perfect grid mazes: generation, validation, the layout file format and
//! the agent dynamics.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nn::checkpoint::Lines;
use crate::rng::rng_from_seed;

/// Wall bits per cell.
pub const NORTH: u8 = 1;
pub const EAST: u8 = 2;
pub const SOUTH: u8 = 4;
pub const WEST: u8 = 8;

/// Action order: N, S, E, W.
pub const DIRECTIONS: [u8; 4] = [NORTH, SOUTH, EAST, WEST];

pub type Cell = (usize, usize);

fn opposite(dir: u8) -> u8 {
    match dir {
        NORTH => SOUTH,
        SOUTH => NORTH,
        EAST => WEST,
        WEST => EAST,
        _ => unreachable!("not a direction bit"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MazeLayout {
    size: usize,
    walls: Vec<u8>,
    start: Cell,
    goal: Cell,
}

impl MazeLayout {
    /// Builds a layout after checking wall symmetry and goal reachability.
    pub fn new(size: usize, walls: Vec<u8>, start: Cell, goal: Cell) -> Result<Self> {
        if size < 2 {
            return Err(Error::Config(format!("maze size must be at least 2, got {size}")));
        }
        if walls.len() != size * size || walls.iter().any(|w| *w > 0xF) {
            return Err(Error::Input("wall table must hold one nibble per cell".into()));
        }
        for &(r, c) in &[start, goal] {
            if r >= size || c >= size {
                return Err(Error::Input(format!("cell ({r}, {c}) outside {size}x{size} maze")));
            }
        }
        let layout = MazeLayout {
            size,
            walls,
            start,
            goal,
        };
        if !layout.walls_symmetric() {
            return Err(Error::Input("walls are not symmetric across shared edges".into()));
        }
        if layout.distances_from(goal)[layout.index(start)].is_none() {
            return Err(Error::Input("goal is not reachable from start".into()));
        }
        Ok(layout)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn walls(&self, cell: Cell) -> u8 {
        self.walls[self.index(cell)]
    }

    pub fn index(&self, (r, c): Cell) -> usize {
        r * self.size + c
    }

    pub fn is_open(&self, cell: Cell, dir: u8) -> bool {
        self.walls(cell) & dir == 0
    }

    /// Neighbouring cell in `dir`, ignoring walls; `None` at the border.
    pub fn neighbor(&self, (r, c): Cell, dir: u8) -> Option<Cell> {
        let n = self.size;
        match dir {
            NORTH if r > 0 => Some((r - 1, c)),
            SOUTH if r + 1 < n => Some((r + 1, c)),
            EAST if c + 1 < n => Some((r, c + 1)),
            WEST if c > 0 => Some((r, c - 1)),
            _ => None,
        }
    }

    /// Where a move in `dir` from `cell` ends; blocked moves stay put.
    pub fn move_from(&self, cell: Cell, dir: u8) -> Cell {
        match self.neighbor(cell, dir) {
            Some(next) if self.is_open(cell, dir) => next,
            _ => cell,
        }
    }

    /// Every shared edge is either open on both sides or walled on both;
    /// the outer border is walled.
    pub fn walls_symmetric(&self) -> bool {
        for r in 0..self.size {
            for c in 0..self.size {
                for dir in DIRECTIONS {
                    let wall = !self.is_open((r, c), dir);
                    match self.neighbor((r, c), dir) {
                        Some(other) => {
                            if wall != !self.is_open(other, opposite(dir)) {
                                return false;
                            }
                        }
                        None => {
                            if !wall {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// BFS step counts from `source` to every cell (`None` if unreachable).
    pub fn distances_from(&self, source: Cell) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.size * self.size];
        let mut queue = VecDeque::new();
        dist[self.index(source)] = Some(0);
        queue.push_back(source);
        while let Some(cell) = queue.pop_front() {
            let d = dist[self.index(cell)].unwrap();
            for dir in DIRECTIONS {
                let next = self.move_from(cell, dir);
                if next != cell && dist[self.index(next)].is_none() {
                    dist[self.index(next)] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    pub fn all_connected(&self) -> bool {
        self.distances_from(self.start).iter().all(Option::is_some)
    }

    pub fn shortest_path_len(&self) -> usize {
        self.distances_from(self.goal)[self.index(self.start)].expect("validated layout")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.size).unwrap();
        for r in 0..self.size {
            for c in 0..self.size {
                write!(out, "{:x}", self.walls((r, c))).unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "start {} {}", self.start.0, self.start.1).unwrap();
        writeln!(out, "goal {} {}", self.goal.0, self.goal.1).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let size: usize = lines
            .next_line()?
            .trim()
            .parse()
            .map_err(|_| lines.error("expected maze size"))?;
        if size < 2 {
            return Err(lines.error(format!("maze size must be at least 2, got {size}")));
        }
        let mut walls = Vec::with_capacity(size * size);
        for _ in 0..size {
            let row = lines.next_line()?.trim();
            if row.chars().count() != size {
                return Err(lines.error(format!("expected {size} hex digits, found `{row}`")));
            }
            for ch in row.chars() {
                let v = ch.to_digit(16).ok_or_else(|| lines.error(format!("invalid wall nibble `{ch}`")))?;
                walls.push(v as u8);
            }
        }
        let mut cell = |key: &str| -> Result<Cell> {
            let line = lines.next_line()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                [k, r, c] if *k == key => match (r.parse(), c.parse()) {
                    (Ok(r), Ok(c)) => Ok((r, c)),
                    _ => Err(lines.error(format!("invalid `{key}` coordinates"))),
                },
                _ => Err(lines.error(format!("expected `{key} <row> <col>`"))),
            }
        };
        let start = cell("start")?;
        let goal = cell("goal")?;
        MazeLayout::new(size, walls, start, goal)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MazeLayout::from_text(&text)
    }
}

/// Randomized depth-first carving from the top-left cell. Start is the
/// top-left corner, goal the bottom-right one.
pub fn maze_generate(size: usize, seed: u64) -> Result<MazeLayout> {
    if size < 2 {
        return Err(Error::Config(format!("maze size must be at least 2, got {size}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut walls = vec![0xF_u8; size * size];
    let mut visited = vec![false; size * size];
    let idx = |(r, c): Cell| r * size + c;
    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    let probe = MazeLayout {
        size,
        walls: vec![0; size * size],
        start: (0, 0),
        goal: (0, 0),
    };
    while let Some(&cell) = stack.last() {
        let mut options: Vec<(u8, Cell)> = DIRECTIONS
            .iter()
            .filter_map(|&d| probe.neighbor(cell, d).map(|n| (d, n)))
            .filter(|(_, n)| !visited[idx(*n)])
            .collect();
        if options.is_empty() {
            stack.pop();
            continue;
        }
        options.shuffle(&mut rng);
        let (dir, next) = options[0];
        walls[idx(cell)] &= !dir;
        walls[idx(next)] &= !opposite(dir);
        visited[idx(next)] = true;
        stack.push(next);
    }
    MazeLayout::new(size, walls, (0, 0), (size - 1, size - 1))
}

/// Agent position inside a fixed layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MazeEnv {
    pub layout: MazeLayout,
    pub agent: Cell,
}

pub const CHANNELS: usize = 3;

impl MazeEnv {
    pub fn new(layout: MazeLayout) -> Self {
        let agent = layout.start();
        MazeEnv { layout, agent }
    }

    /// Channels-last grid: per cell `[wall code, agent, goal]`, where the wall
    /// code is the cell's wall nibble divided by 15.
    pub fn observe(&self) -> Vec<f64> {
        let n = self.layout.size();
        let mut out = vec![0.0; n * n * CHANNELS];
        for r in 0..n {
            for c in 0..n {
                out[(r * n + c) * CHANNELS] = f64::from(self.layout.walls((r, c))) / 15.0;
            }
        }
        out[self.layout.index(self.agent) * CHANNELS + 1] = 1.0;
        out[self.layout.index(self.layout.goal()) * CHANNELS + 2] = 1.0;
        out
    }

    /// Moves the agent; returns true when it stands on the goal.
    pub fn step(&mut self, action: usize) -> bool {
        self.agent = self.layout.move_from(self.agent, DIRECTIONS[action]);
        self.agent == self.layout.goal()
    }
}

/// True when an encoded maze state has the agent on the goal cell.
pub fn agent_on_goal(obs: &[f64]) -> bool {
    obs.chunks(CHANNELS).any(|cell| cell[1] == 1.0 && cell[2] == 1.0)
}
