//! Static PNG charts rendered from the CSV outputs: training curves, the
//! sensitivity heatmap and response traces. Text uses a built-in 5×7 bitmap
//! font so no font files are needed.

use std::io::BufRead;
use std::path::Path;

use image::{Rgb, RgbImage};

use crate::{Error, Result};

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);

pub const PALETTE: [Rgb<u8>; 8] = [
    Rgb([31, 119, 180]),
    Rgb([255, 127, 14]),
    Rgb([44, 160, 44]),
    Rgb([214, 39, 40]),
    Rgb([148, 103, 189]),
    Rgb([140, 86, 75]),
    Rgb([227, 119, 194]),
    Rgb([127, 127, 127]),
];

fn glyph(c: char) -> [u8; 7] {
    match c.to_ascii_uppercase() {
        '0' => [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110],
        '1' => [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
        '2' | '²' => [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111],
        '3' => [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110],
        '4' => [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010],
        '5' => [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110],
        '6' => [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110],
        '7' => [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000],
        '8' => [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110],
        '9' => [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100],
        'A' => [0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001],
        'B' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110],
        'C' => [0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110],
        'D' => [0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100],
        'E' => [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111],
        'F' => [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000],
        'G' => [0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111],
        'H' => [0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001],
        'I' => [0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110],
        'J' => [0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100],
        'K' => [0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001],
        'L' => [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111],
        'M' => [0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001],
        'N' => [0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001],
        'O' => [0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110],
        'P' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000],
        'Q' => [0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101],
        'R' => [0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001],
        'S' => [0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110],
        'T' => [0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100],
        'U' => [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110],
        'V' => [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100],
        'W' => [0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010],
        'X' => [0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001],
        'Y' => [0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100],
        'Z' => [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111],
        '.' => [0, 0, 0, 0, 0, 0b01100, 0b01100],
        ',' => [0, 0, 0, 0, 0b01100, 0b00100, 0b01000],
        '-' => [0, 0, 0, 0b11111, 0, 0, 0],
        '+' => [0, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0],
        '_' => [0, 0, 0, 0, 0, 0, 0b11111],
        ':' => [0, 0b01100, 0b01100, 0, 0b01100, 0b01100, 0],
        '=' => [0, 0, 0b11111, 0, 0b11111, 0, 0],
        '/' => [0b00001, 0b00010, 0b00010, 0b00100, 0b01000, 0b01000, 0b10000],
        '^' => [0b00100, 0b01010, 0b10001, 0, 0, 0, 0],
        '[' => [0b01110, 0b01000, 0b01000, 0b01000, 0b01000, 0b01000, 0b01110],
        ']' => [0b01110, 0b00010, 0b00010, 0b00010, 0b00010, 0b00010, 0b01110],
        '(' => [0b00010, 0b00100, 0b01000, 0b01000, 0b01000, 0b00100, 0b00010],
        ')' => [0b01000, 0b00100, 0b00010, 0b00010, 0b00010, 0b00100, 0b01000],
        '%' => [0b11000, 0b11001, 0b00010, 0b00100, 0b01000, 0b10011, 0b00011],
        ' ' => [0; 7],
        _ => [0b11111, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b11111],
    }
}

/// Width in pixels of `text` at `scale`.
pub fn text_width(text: &str, scale: u32) -> u32 {
    text.chars().count() as u32 * 6 * scale
}

struct Canvas {
    img: RgbImage,
}

impl Canvas {
    fn new(w: u32, h: u32) -> Self {
        Self {
            img: RgbImage::from_pixel(w, h, WHITE),
        }
    }

    fn put(&mut self, x: i64, y: i64, c: Rgb<u8>) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, c);
        }
    }

    fn rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: Rgb<u8>) {
        for y in y0..y1 {
            for x in x0..x1 {
                self.put(x, y, c);
            }
        }
    }

    fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb<u8>) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.put(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn text(&mut self, x: i64, y: i64, text: &str, scale: u32, c: Rgb<u8>) {
        let s = scale as i64;
        for (i, ch) in text.chars().enumerate() {
            let rows = glyph(ch);
            let ox = x + i as i64 * 6 * s;
            for (r, bits) in rows.iter().enumerate() {
                for col in 0..5 {
                    if bits & (0b10000 >> col) != 0 {
                        self.rect(
                            ox + col * s,
                            y + r as i64 * s,
                            ox + (col + 1) * s,
                            y + (r as i64 + 1) * s,
                            c,
                        );
                    }
                }
            }
        }
    }
}

pub fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub width: u32,
    pub height: u32,
}

impl LineChart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            width: 900,
            height: 520,
        }
    }

    pub fn series(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
        });
        self
    }

    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let mut b: Option<(f64, f64, f64, f64)> = None;
        for &(x, y) in pts {
            b = Some(match b {
                None => (x, x, y, y),
                Some((a, bx, c, d)) => (a.min(x), bx.max(x), c.min(y), d.max(y)),
            });
        }
        b.map(|(x0, mut x1, mut y0, mut y1)| {
            if x1 == x0 {
                x1 = x0 + 1.0;
            }
            if y1 == y0 {
                let pad = if y0 == 0.0 { 1.0 } else { y0.abs() * 0.1 };
                y0 -= pad;
                y1 += pad;
            }
            (x0, x1, y0, y1)
        })
    }

    pub fn render(&self) -> RgbImage {
        let mut cv = Canvas::new(self.width, self.height);
        let (left, right, top, bottom) = (90i64, 180i64, 40i64, 50i64);
        let (w, h) = (self.width as i64, self.height as i64);
        let (px0, px1, py0, py1) = (left, w - right, top, h - bottom);
        cv.text(left, 12, &self.title, 2, BLACK);
        let Some((x0, x1, y0, y1)) = self.bounds() else {
            cv.text(px0 + 10, (py0 + py1) / 2, "NO DATA", 2, BLACK);
            return cv.img;
        };
        let map = |x: f64, y: f64| -> (i64, i64) {
            let u = (x - x0) / (x1 - x0);
            let v = (y - y0) / (y1 - y0);
            (
                px0 + (u * (px1 - px0) as f64).round() as i64,
                py1 - (v * (py1 - py0) as f64).round() as i64,
            )
        };
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let gy = py1 - (f * (py1 - py0) as f64) as i64;
            let gx = px0 + (f * (px1 - px0) as f64) as i64;
            cv.line((px0, gy), (px1, gy), GRID);
            cv.line((gx, py0), (gx, py1), GRID);
            let yl = tick_label(y0 + f * (y1 - y0));
            cv.text(px0 - 6 - text_width(&yl, 1) as i64, gy - 3, &yl, 1, BLACK);
            let xl = tick_label(x0 + f * (x1 - x0));
            cv.text(gx - text_width(&xl, 1) as i64 / 2, py1 + 6, &xl, 1, BLACK);
        }
        cv.line((px0, py0), (px0, py1), BLACK);
        cv.line((px0, py1), (px1, py1), BLACK);
        cv.text(
            (px0 + px1) / 2 - text_width(&self.x_label, 1) as i64 / 2,
            py1 + 24,
            &self.x_label,
            1,
            BLACK,
        );
        cv.text(8, py0 - 14, &self.y_label, 1, BLACK);

        for (i, s) in self.series.iter().enumerate() {
            let c = PALETTE[i % PALETTE.len()];
            let mut prev: Option<(i64, i64)> = None;
            for &(x, y) in &s.points {
                if !(x.is_finite() && y.is_finite()) {
                    prev = None;
                    continue;
                }
                let p = map(x, y);
                if let Some(q) = prev {
                    cv.line(q, p, c);
                } else {
                    cv.put(p.0, p.1, c);
                }
                prev = Some(p);
            }
            let ly = py0 + 4 + i as i64 * 14;
            cv.rect(px1 + 12, ly + 2, px1 + 26, ly + 5, c);
            cv.text(px1 + 32, ly, &s.label, 1, BLACK);
        }
        cv.img
    }
}

/// Colour ramp from white (0) to dark red (1).
pub fn heat_color(v: f64) -> Rgb<u8> {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let lerp = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    Rgb([lerp(255.0, 140.0), lerp(255.0, 10.0), lerp(255.0, 20.0)])
}

/// Labelled grid with one cell per value and the value printed in the cell.
pub fn heatmap(title: &str, row_labels: &[String], col_labels: &[String], values: &[Vec<f64>]) -> RgbImage {
    let cell_w = 110i64;
    let cell_h = 48i64;
    let left = 80i64;
    let top = 70i64;
    let w = left + cell_w * col_labels.len() as i64 + 20;
    let h = top + cell_h * row_labels.len() as i64 + 20;
    let mut cv = Canvas::new(w as u32, h as u32);
    cv.text(10, 12, title, 2, BLACK);
    for (j, lab) in col_labels.iter().enumerate() {
        let x = left + j as i64 * cell_w + cell_w / 2 - text_width(lab, 1) as i64 / 2;
        cv.text(x, top - 14, lab, 1, BLACK);
    }
    for (i, lab) in row_labels.iter().enumerate() {
        let y0 = top + i as i64 * cell_h;
        cv.text(10, y0 + cell_h / 2 - 7, lab, 2, BLACK);
        for j in 0..col_labels.len() {
            let v = values.get(i).and_then(|r| r.get(j)).copied().unwrap_or(f64::NAN);
            let x0 = left + j as i64 * cell_w;
            cv.rect(x0, y0, x0 + cell_w - 1, y0 + cell_h - 1, heat_color(v));
            let txt = format!("{v:.2}");
            let tc = if v > 0.6 { WHITE } else { BLACK };
            cv.text(
                x0 + cell_w / 2 - text_width(&txt, 2) as i64 / 2,
                y0 + cell_h / 2 - 7,
                &txt,
                2,
                tc,
            );
        }
    }
    cv.img
}

/// Header plus numeric columns of a CSV; `#` lines are skipped and `nan`
/// parses as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut header: Option<Vec<String>> = None;
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match &header {
                None => {
                    let h: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
                    columns = vec![Vec::new(); h.len()];
                    header = Some(h);
                }
                Some(h) => {
                    let fields: Vec<&str> = line.split(',').collect();
                    if fields.len() != h.len() {
                        return Err(Error::Parse(format!(
                            "row has {} fields, header has {}",
                            fields.len(),
                            h.len()
                        )));
                    }
                    for (col, f) in columns.iter_mut().zip(fields) {
                        let f = f.trim();
                        let v = if f.eq_ignore_ascii_case("nan") {
                            f64::NAN
                        } else {
                            f.parse::<f64>()
                                .map_err(|_| Error::Parse(format!("not a number: {f:?}")))?
                        };
                        col.push(v);
                    }
                }
            }
        }
        let header = header.ok_or_else(|| Error::Parse("CSV has no header".into()))?;
        Ok(Self { header, columns })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(f))
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }
}

/// Validation MAPE curves from a training trace CSV.
pub fn trace_chart(trace: &CsvTable, title: &str) -> Result<LineChart> {
    let epochs = trace
        .column("epoch")
        .ok_or_else(|| Error::Parse("trace has no epoch column".into()))?;
    let mut chart = LineChart::new(title, "EPOCH", "VALIDATION MAPE");
    for (name, col) in trace.header.iter().zip(&trace.columns) {
        if name == "mape_avg" || name.starts_with("mape_task") {
            chart = chart.series(name, epochs.iter().copied().zip(col.iter().copied()).collect());
        }
    }
    Ok(chart)
}

/// Several traces, one curve each (for instance MTL vs DNN average MAPE).
pub fn compare_traces(traces: &[(String, CsvTable)], column: &str, title: &str) -> Result<LineChart> {
    let mut chart = LineChart::new(title, "EPOCH", column);
    for (label, t) in traces {
        let (Some(e), Some(c)) = (t.column("epoch"), t.column(column)) else {
            return Err(Error::Parse(format!("trace {label} lacks epoch or {column}")));
        };
        chart = chart.series(label, e.iter().copied().zip(c.iter().copied()).collect());
    }
    Ok(chart)
}

/// Response channels against the first column (time).
pub fn response_chart(resp: &CsvTable, channels: &[String], title: &str) -> Result<LineChart> {
    let t = resp
        .columns
        .first()
        .ok_or_else(|| Error::Parse("empty response table".into()))?;
    let mut chart = LineChart::new(title, &resp.header[0], "");
    for ch in channels {
        let c = resp
            .column(ch)
            .ok_or_else(|| Error::Parse(format!("response has no channel {ch:?}")))?;
        chart = chart.series(ch, t.iter().copied().zip(c.iter().copied()).collect());
    }
    Ok(chart)
}

/// Heatmap from a labelled matrix CSV (first column holds row labels).
pub fn heatmap_from_csv<R: BufRead>(r: R, title: &str) -> Result<RgbImage> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let cols: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        rows.push(fields.next().unwrap_or_default().to_string());
        let vals = fields
            .map(|f| crate::fmt::parse_f64(f, "matrix"))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != cols.len() {
            return Err(Error::Parse(format!("matrix row {line:?} has wrong length")));
        }
        values.push(vals);
    }
    Ok(heatmap(title, &rows, &cols, &values))
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::Io(io),
            other => Error::Io(std::io::Error::other(other.to_string())),
        })
}
