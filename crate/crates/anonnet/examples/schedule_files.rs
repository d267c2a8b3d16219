//! Reading and writing schedules as plain text.
//!
//! A schedule file names the size and window on the first line, then lists
//! one period round per line as `t=<r>: u-v,u-v,...`. The example renders a
//! built-in family, round-trips it through a file on disk, and shows the
//! error reporting for a malformed listing.
//!
//! Run with: cargo run --example schedule_files

use anonnet::schedule::Schedule;
use std::fs;

pub fn run_example() -> anyhow::Result<()> {
    let schedule = Schedule::matching_alternation(4)?;
    let text = schedule.render();
    println!("rendered schedule file:\n{text}");

    let path = std::env::temp_dir().join("anonnet_example_schedule.txt");
    fs::write(&path, &text)?;
    let reread = Schedule::parse(&fs::read_to_string(&path)?)?;
    fs::remove_file(&path).ok();

    anyhow::ensure!(reread.n() == schedule.n(), "size must survive the round trip");
    anyhow::ensure!(reread.t() == schedule.t(), "window must survive the round trip");
    anyhow::ensure!(reread.period() == schedule.period(), "rounds must survive the round trip");
    println!("round trip through {} ok", path.display());

    // Rounds must be contiguous from zero; a gap is rejected with the line.
    let bad = "n=4 T=2\nt=0: 0-1,2-3\nt=2: 0-2,1-3\n";
    match Schedule::parse(bad) {
        Err(e) => println!("\nmalformed listing rejected: {e}"),
        Ok(_) => anyhow::bail!("gapped round listing must not parse"),
    }

    // An empty round is legal text: `t=<r>:` with nothing after the colon.
    let sparse = Schedule::parse("n=3 T=2\nt=0: 0-1,1-2\nt=1:\n")?;
    println!("\nsparse schedule parsed: {} rounds, window-connected = {}",
        sparse.period_len(), sparse.is_window_connected(2));
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
