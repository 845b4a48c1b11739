//! Deterministic SVG export of a drawing with its triples circled in red.
//!
//! Coordinates are converted to fixed three-decimal strings by exact
//! rational rounding, so identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::analysis::Analysis;
use crate::drawing::Drawing;
use crate::geometry::{integer, Point, Rational};

pub const PALETTE_ENV: &str = "QUASICROSS_PALETTE";

const CANVAS: i64 = 800;
const MARGIN: i64 = 40;
const TRIPLE_PAD: i64 = 4;
const FALLBACK: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf", "#bcbd22", "#7f7f7f",
];

#[derive(Debug, thiserror::Error)]
pub enum SvgError {
    #[error("drawing is not simple; refusing to export")]
    Invalid,
    #[error("palette entry `{0}` is not of the form tag=color")]
    Palette(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Stroke colors per edge tag. Untagged edges are black; the stage tags
/// `initial`, `pink`, `dark-blue` and `final` have fixed colors; other tags
/// get a stable color from a small fallback list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette {
    colors: BTreeMap<String, String>,
}

impl Default for Palette {
    fn default() -> Self {
        let colors = [
            ("initial", "#000000"),
            ("pink", "#ff69b4"),
            ("dark-blue", "#00008b"),
            ("dark blue", "#00008b"),
            ("darkblue", "#00008b"),
            ("final", "#2e8b57"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Palette { colors }
    }
}

impl Palette {
    /// Apply overrides of the form `tag=color,tag2=color2`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self, SvgError> {
        for entry in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (tag, color) = entry
                .split_once('=')
                .ok_or_else(|| SvgError::Palette(entry.to_string()))?;
            let color = color.trim();
            if color.is_empty() || color.contains(['"', '<', '>', '&']) {
                return Err(SvgError::Palette(entry.to_string()));
            }
            self.colors
                .insert(tag.trim().to_string(), color.to_string());
        }
        Ok(self)
    }

    /// Default palette with overrides from `QUASICROSS_PALETTE`, if set.
    pub fn from_env() -> Result<Self, SvgError> {
        match std::env::var(PALETTE_ENV) {
            Ok(spec) => Palette::default().with_overrides(&spec),
            Err(_) => Ok(Palette::default()),
        }
    }

    pub fn color_for(&self, tag: Option<&str>) -> String {
        let Some(tag) = tag else {
            return self
                .colors
                .get("")
                .cloned()
                .unwrap_or_else(|| "#000000".to_string());
        };
        if let Some(c) = self.colors.get(tag) {
            return c.clone();
        }
        // FNV-1a, for a color that does not depend on process state.
        let h = tag.bytes().fold(0xcbf29ce484222325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x100000001b3)
        });
        FALLBACK[(h % FALLBACK.len() as u64) as usize].to_string()
    }
}

/// `r` rounded half away from zero to three decimals.
fn decimal(r: &Rational) -> String {
    let scaled = r * integer(1000);
    let rounded = if scaled.is_negative() {
        -((-scaled) + Rational::new(BigInt::one(), BigInt::from(2)))
            .floor()
            .to_integer()
    } else {
        (scaled + Rational::new(BigInt::one(), BigInt::from(2)))
            .floor()
            .to_integer()
    };
    let sign = if rounded.is_negative() { "-" } else { "" };
    let abs = rounded.abs();
    let thousand = BigInt::from(1000);
    format!(
        "{sign}{}.{:03}",
        &abs / &thousand,
        (&abs % &thousand).to_string().parse::<u32>().unwrap_or(0)
    )
}

/// Smallest multiple of 1/1000 whose square is at least `sq`.
fn sqrt_up(sq: &Rational) -> Rational {
    let scaled = (sq * integer(1_000_000)).ceil().to_integer();
    let mut root = scaled.sqrt();
    if &root * &root < scaled {
        root += 1;
    }
    Rational::new(root, BigInt::from(1000))
}

struct View {
    min_x: Rational,
    max_y: Rational,
    scale: Rational,
    width: Rational,
    height: Rational,
}

impl View {
    fn fit<'a>(points: impl Iterator<Item = &'a Point>) -> View {
        let mut it = points.peekable();
        let first = it
            .peek()
            .cloned()
            .cloned()
            .unwrap_or_else(|| Point::from_ints(0, 0));
        let (mut min_x, mut max_x, mut min_y, mut max_y) = (
            first.x.clone(),
            first.x.clone(),
            first.y.clone(),
            first.y.clone(),
        );
        for p in it {
            min_x = min_x.min(p.x.clone());
            max_x = max_x.max(p.x.clone());
            min_y = min_y.min(p.y.clone());
            max_y = max_y.max(p.y.clone());
        }
        let span = (&max_x - &min_x).max(&max_y - &min_y);
        let scale = if span.is_zero() {
            integer(1)
        } else {
            integer(CANVAS) / span
        };
        let width = (&max_x - &min_x) * &scale + integer(2 * MARGIN);
        let height = (&max_y - &min_y) * &scale + integer(2 * MARGIN);
        View {
            min_x,
            max_y,
            scale,
            width,
            height,
        }
    }

    fn x(&self, p: &Point) -> Rational {
        (&p.x - &self.min_x) * &self.scale + integer(MARGIN)
    }

    fn y(&self, p: &Point) -> Rational {
        (&self.max_y - &p.y) * &self.scale + integer(MARGIN)
    }

    fn xy(&self, p: &Point) -> String {
        format!("{},{}", decimal(&self.x(p)), decimal(&self.y(p)))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Render a simple drawing. Each triple gets a red circle centered at the
/// centroid of its three crossing points, large enough to enclose them.
pub fn export_svg(d: &Drawing, analysis: &Analysis, palette: &Palette) -> Result<String, SvgError> {
    if !analysis.validation.is_valid {
        return Err(SvgError::Invalid);
    }
    let view = View::fit(d.all_points());
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = decimal(&view.width),
        h = decimal(&view.height)
    )
    .unwrap();
    writeln!(
        out,
        "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>"
    )
    .unwrap();

    writeln!(
        out,
        "<g id=\"edges\" fill=\"none\" stroke-width=\"1.5\" stroke-linejoin=\"round\">"
    )
    .unwrap();
    for (k, e) in d.edges().iter().enumerate() {
        let pts: Vec<String> = d.polyline(k).iter().map(|p| view.xy(p)).collect();
        writeln!(
            out,
            "<polyline data-edge=\"{}\" stroke=\"{}\" points=\"{}\"/>",
            escape(&d.edge_label(k)),
            escape(&palette.color_for(e.tag.as_deref())),
            pts.join(" ")
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();

    writeln!(
        out,
        "<g id=\"vertices\" font-family=\"sans-serif\" font-size=\"14\">"
    )
    .unwrap();
    for v in d.vertices() {
        let (x, y) = (view.x(&v.pos), view.y(&v.pos));
        writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#000000\"/>",
            decimal(&x),
            decimal(&y)
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            decimal(&(x + integer(6))),
            decimal(&(y - integer(6))),
            escape(&v.id)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();

    writeln!(
        out,
        "<g id=\"triples\" fill=\"none\" stroke=\"#ff0000\" stroke-width=\"2\">"
    )
    .unwrap();
    for pts in analysis.triple_crossing_points() {
        let cx = pts
            .iter()
            .map(|p| view.x(p))
            .fold(Rational::zero(), |a, b| a + b)
            / integer(3);
        let cy = pts
            .iter()
            .map(|p| view.y(p))
            .fold(Rational::zero(), |a, b| a + b)
            / integer(3);
        let r_sq = pts
            .iter()
            .map(|p| {
                let dx = view.x(p) - &cx;
                let dy = view.y(p) - &cy;
                &dx * &dx + &dy * &dy
            })
            .max()
            .expect("three points");
        let r = sqrt_up(&r_sq) + integer(TRIPLE_PAD);
        writeln!(
            out,
            "<circle class=\"triple\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
            decimal(&cx),
            decimal(&cy),
            decimal(&r)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_svg(
    path: &Path,
    d: &Drawing,
    analysis: &Analysis,
    palette: &Palette,
) -> Result<(), SvgError> {
    let text = export_svg(d, analysis, palette)?;
    std::fs::write(path, text).map_err(|source| SvgError::Io {
        path: path.display().to_string(),
        source,
    })
}
