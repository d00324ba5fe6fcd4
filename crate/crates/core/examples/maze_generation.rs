//! Generates a maze, draws it, and round-trips it through the text format.

use ifolab::envs::maze::{maze_generate, EAST, SOUTH};

fn main() -> ifolab::Result<()> {
    let size: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let seed: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let layout = maze_generate(size, seed)?;

    println!("+{}", "--+".repeat(size));
    for r in 0..size {
        let mut cells = String::from("|");
        let mut floor = String::from("+");
        for c in 0..size {
            let mark = if (r, c) == layout.start() {
                "S "
            } else if (r, c) == layout.goal() {
                "G "
            } else {
                "  "
            };
            cells.push_str(mark);
            cells.push(if layout.is_open((r, c), EAST) { ' ' } else { '|' });
            floor.push_str(if layout.is_open((r, c), SOUTH) { "  " } else { "--" });
            floor.push('+');
        }
        println!("{cells}\n{floor}");
    }
    println!("shortest path: {} moves", layout.shortest_path_len());

    let text = layout.to_text();
    println!("\n{text}");
    assert_eq!(ifolab::envs::maze::MazeLayout::from_text(&text)?, layout);
    Ok(())
}
