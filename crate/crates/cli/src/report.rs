//! Plain reports rendered either as aligned text or as CSV.

use std::fmt::Write;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

impl Format {
    fn digits(self) -> usize {
        match self {
            Format::Text => 4,
            Format::Csv => 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "yes" } else { "no" }.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// `x` rounded to `digits` significant digits, printed in the shortest form
/// that reads back to the rounded value.
pub fn fmt_num(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("scientific notation parses");
    if rounded == 0.0 {
        return "0".into();
    }
    let a = rounded.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn render_cell(c: &Cell, f: Format) -> String {
    match c {
        Cell::Num(v) => fmt_num(*v, f.digits()),
        Cell::Int(v) => v.to_string(),
        Cell::Text(t) => t.clone(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Section(String),
    Field(String, Cell),
    List(String, Vec<Cell>),
    Table {
        header: Vec<String>,
        rows: Vec<Vec<Cell>>,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    items: Vec<Item>,
}

impl Report {
    pub fn section(&mut self, name: &str) -> &mut Self {
        self.items.push(Item::Section(name.into()));
        self
    }

    pub fn field(&mut self, key: &str, value: impl Into<Cell>) -> &mut Self {
        self.items.push(Item::Field(key.into(), value.into()));
        self
    }

    pub fn vector<T: Into<Cell> + Copy>(&mut self, key: &str, values: &[T]) -> &mut Self {
        self.items
            .push(Item::List(key.into(), values.iter().map(|&v| v.into()).collect()));
        self
    }

    pub fn table(&mut self, header: &[&str], rows: Vec<Vec<Cell>>) -> &mut Self {
        self.items.push(Item::Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        });
        self
    }

    pub fn render(&self, f: Format) -> String {
        match f {
            Format::Text => self.render_text(),
            Format::Csv => self.render_csv(),
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        for (i, item) in self.items.iter().enumerate() {
            match item {
                Item::Section(name) => {
                    if i > 0 {
                        out.push('\n');
                    }
                    let _ = writeln!(out, "[{name}]");
                }
                Item::Field(key, cell) => {
                    let _ = writeln!(out, "{key}: {}", render_cell(cell, Format::Text));
                }
                Item::List(key, cells) => {
                    let vals: Vec<String> = cells.iter().map(|c| render_cell(c, Format::Text)).collect();
                    let _ = writeln!(out, "{key}: ({})", vals.join(", "));
                }
                Item::Table { header, rows } => {
                    let cells: Vec<Vec<String>> = rows
                        .iter()
                        .map(|r| r.iter().map(|c| render_cell(c, Format::Text)).collect())
                        .collect();
                    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
                    for r in &cells {
                        for (w, c) in width.iter_mut().zip(r) {
                            *w = (*w).max(c.len());
                        }
                    }
                    let line = |r: &[String]| {
                        r.iter()
                            .zip(&width)
                            .map(|(c, &w)| format!("{c:>w$}"))
                            .collect::<Vec<_>>()
                            .join("  ")
                    };
                    let _ = writeln!(out, "{}", line(header));
                    for r in &cells {
                        let _ = writeln!(out, "{}", line(r));
                    }
                }
            }
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let mut prefix = String::new();
        for item in &self.items {
            match item {
                Item::Section(name) => prefix = format!("{name}."),
                Item::Field(key, cell) => {
                    let _ = writeln!(out, "{prefix}{key},{}", csv_escape(&render_cell(cell, Format::Csv)));
                }
                Item::List(key, cells) => {
                    let vals: Vec<String> = cells
                        .iter()
                        .map(|c| csv_escape(&render_cell(c, Format::Csv)))
                        .collect();
                    let _ = writeln!(out, "{prefix}{key},{}", vals.join(","));
                }
                Item::Table { header, rows } => {
                    let _ = writeln!(out, "{}", header.join(","));
                    for r in rows {
                        let vals: Vec<String> = r.iter().map(|c| csv_escape(&render_cell(c, Format::Csv))).collect();
                        let _ = writeln!(out, "{}", vals.join(","));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(34.482_758_620_69, 4), "34.48");
        assert_eq!(fmt_num(123967.4, 4), "124000");
        assert_eq!(fmt_num(0.0805, 4), "0.0805");
        assert_eq!(fmt_num(2.0, 12), "2");
        assert_eq!(fmt_num(4.36e-5, 4), "0.0000436");
        assert_eq!(fmt_num(1.2346e-9, 4), "1.235e-9");
        assert_eq!(fmt_num(f64::INFINITY, 4), "inf");
        assert_eq!(fmt_num(-0.0, 4), "0");
    }

    #[test]
    fn text_is_csv_rounded() {
        for x in [47.530270001, 1.0 / 3.0, 964.623412, 7.0e-7] {
            let csv: f64 = fmt_num(x, 12).parse().unwrap();
            assert_eq!(fmt_num(csv, 4), fmt_num(x, 4));
        }
    }

    #[test]
    fn renders_both_formats() {
        let mut r = Report::default();
        r.section("solution").field("s_star", 8.605_551_275_46).vector("x_star", &[2.6, 1.4]);
        r.table(&["a", "b"], vec![vec![Cell::Int(1), Cell::from("x,y")]]);
        assert_eq!(r.render(Format::Text), "[solution]\ns_star: 8.606\nx_star: (2.6, 1.4)\na    b\n1  x,y\n");
        assert_eq!(
            r.render(Format::Csv),
            "solution.s_star,8.60555127546\nsolution.x_star,2.6,1.4\na,b\n1,\"x,y\"\n"
        );
    }
}
