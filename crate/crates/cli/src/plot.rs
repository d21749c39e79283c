//! Whitespace-separated data files for gnuplot.

use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    LogX,
    LogLog,
}

impl Scale {
    fn flag(self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::LogX => "logscale x",
            Scale::LogLog => "logscale xy",
        }
    }
}

/// A titled block of columns; blocks in one file are separated by two blank
/// lines so gnuplot can address them with `index`.
pub struct PlotFile {
    text: String,
    blocks: usize,
}

impl PlotFile {
    pub fn new(title: &str, columns: &[&str], scale: Scale) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# {title}");
        let _ = writeln!(text, "# columns: {}", columns.join(" "));
        let _ = writeln!(text, "# scale: {}", scale.flag());
        Self { text, blocks: 0 }
    }

    pub fn block(&mut self, label: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> &mut Self {
        if self.blocks > 0 {
            self.text.push_str("\n\n");
        }
        self.blocks += 1;
        let _ = writeln!(self.text, "# {label}");
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            let _ = writeln!(self.text, "{}", cells.join(" "));
        }
        self
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}
