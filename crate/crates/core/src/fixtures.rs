//! Procedural stand-ins for photographed desk scenes.
//!
//! Each scene is a 640x480 image with a printed code square (whose corners
//! serve as landmarks), a few distinct objects and mild sensor-like noise.
//! `anchors` mark object interiors that make good ROI picks.

use image::Rgb;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{LandmarkSet, Point};
use crate::imagecore::{Image, CANVAS_HEIGHT, CANVAS_WIDTH};

pub const SCENE_NAMES: [&str; 6] = ["blocks", "coffee-maker", "ink", "map", "vase", "poster"];

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub image: Image,
    pub landmarks: LandmarkSet,
    pub anchors: Vec<(u32, u32)>,
}

type Painter = Box<dyn Fn(f64, f64) -> Option<[f64; 3]>>;

struct Canvas {
    layers: Vec<Painter>,
    background: Box<dyn Fn(f64, f64) -> [f64; 3]>,
}

impl Canvas {
    fn new(bg: impl Fn(f64, f64) -> [f64; 3] + 'static) -> Self {
        Self {
            layers: Vec::new(),
            background: Box::new(bg),
        }
    }

    fn layer(&mut self, p: impl Fn(f64, f64) -> Option<[f64; 3]> + 'static) -> &mut Self {
        self.layers.push(Box::new(p));
        self
    }

    fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, c: [f64; 3]) -> &mut Self {
        self.layer(move |x, y| (x >= x0 && x < x1 && y >= y0 && y < y1).then_some(c))
    }

    /// Ellipse with a soft radial shade towards the rim.
    fn ellipse(&mut self, cx: f64, cy: f64, rx: f64, ry: f64, c: [f64; 3], shade: f64) -> &mut Self {
        self.layer(move |x, y| {
            let d = ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2);
            (d <= 1.0).then(|| c.map(|v| v * (1.0 - shade * d)))
        })
    }

    fn render(&self, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(CANVAS_WIDTH, CANVAS_HEIGHT, |x, y| {
            let (fx, fy) = (x as f64, y as f64);
            let c = self
                .layers
                .iter()
                .rev()
                .find_map(|l| l(fx, fy))
                .unwrap_or_else(|| (self.background)(fx, fy));
            let n: f64 = rng.random_range(-4.0..=4.0);
            Rgb(c.map(|v| (v + n).round().clamp(0.0, 255.0) as u8))
        })
    }
}

/// Printed code square; returns its corner landmarks.
fn code_square(c: &mut Canvas, x0: f64, y0: f64, size: f64) -> LandmarkSet {
    c.rect(x0, y0, x0 + size, y0 + size, [15.0, 15.0, 15.0]);
    let cell = size / 7.0;
    c.layer(move |x, y| {
        let (i, j) = (((x - x0) / cell).floor(), ((y - y0) / cell).floor());
        let inside = (0.0..7.0).contains(&i) && (0.0..7.0).contains(&j);
        (inside && (i as i64 * 3 + j as i64 * 5) % 4 == 1).then_some([240.0, 240.0, 240.0])
    });
    let (a, b) = (x0 as i32, (x0 + size) as i32 - 1);
    let (t, u) = (y0 as i32, (y0 + size) as i32 - 1);
    LandmarkSet([Point::new(a, t), Point::new(b, t), Point::new(b, u), Point::new(a, u)])
}

fn seed_of(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Builds the named scene; `None` for unknown names.
pub fn scene(name: &str) -> Option<Fixture> {
    let name: &'static str = SCENE_NAMES.iter().find(|&&n| n == name)?;
    let (mut c, anchors): (Canvas, Vec<(u32, u32)>) = match name {
        "blocks" => {
            let mut c = Canvas::new(|x, y| [180.0 + 0.05 * x, 150.0 + 0.04 * y, 110.0]);
            c.rect(60.0, 260.0, 180.0, 400.0, [200.0, 40.0, 40.0])
                .rect(200.0, 300.0, 300.0, 400.0, [40.0, 90.0, 200.0])
                .rect(120.0, 140.0, 280.0, 220.0, [250.0, 210.0, 40.0])
                .rect(330.0, 200.0, 420.0, 400.0, [40.0, 160.0, 70.0])
                .rect(340.0, 120.0, 470.0, 190.0, [120.0, 50.0, 150.0]);
            (c, vec![(120, 330), (250, 350), (200, 180), (375, 300), (405, 155)])
        }
        "coffee-maker" => {
            let mut c = Canvas::new(|_, y| if y > 380.0 { [90.0, 70.0, 60.0] } else { [220.0, 215.0, 205.0] });
            c.rect(180.0, 80.0, 420.0, 380.0, [70.0, 70.0, 75.0])
                .rect(200.0, 100.0, 400.0, 160.0, [40.0, 40.0, 45.0])
                .ellipse(300.0, 300.0, 80.0, 60.0, [30.0, 20.0, 15.0], 0.3)
                .ellipse(380.0, 130.0, 12.0, 12.0, [220.0, 30.0, 30.0], 0.1)
                .rect(430.0, 250.0, 470.0, 380.0, [180.0, 60.0, 30.0]);
            (c, vec![(300, 300), (300, 130), (450, 320), (220, 250)])
        }
        "ink" => {
            let mut c = Canvas::new(|x, y| [245.0 - 0.02 * x, 240.0 - 0.02 * y, 225.0]);
            c.ellipse(160.0, 160.0, 70.0, 50.0, [20.0, 40.0, 120.0], 0.2)
                .ellipse(200.0, 190.0, 40.0, 60.0, [20.0, 40.0, 120.0], 0.2)
                .ellipse(380.0, 300.0, 90.0, 40.0, [110.0, 20.0, 30.0], 0.2)
                .ellipse(300.0, 120.0, 25.0, 25.0, [10.0, 10.0, 10.0], 0.0)
                .rect(80.0, 360.0, 300.0, 372.0, [30.0, 30.0, 30.0]);
            (c, vec![(160, 160), (380, 300), (300, 120)])
        }
        "map" => {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let sites: Vec<(f64, f64, [f64; 3])> = (0..12)
                .map(|_| {
                    (
                        rng.random_range(20.0..620.0),
                        rng.random_range(20.0..460.0),
                        [
                            rng.random_range(120.0..230.0),
                            rng.random_range(140.0..230.0),
                            rng.random_range(100.0..210.0),
                        ],
                    )
                })
                .collect();
            let anchors = sites
                .iter()
                .take(5)
                .map(|&(x, y, _)| (x as u32, y as u32))
                .collect();
            let mut c = Canvas::new(move |x, y| {
                let mut best = (f64::INFINITY, [0.0; 3]);
                for &(sx, sy, col) in &sites {
                    let d = (x - sx).powi(2) + (y - sy).powi(2);
                    if d < best.0 {
                        best = (d, col);
                    }
                }
                best.1
            });
            c.rect(0.0, 236.0, 640.0, 244.0, [60.0, 60.0, 60.0])
                .rect(316.0, 0.0, 324.0, 480.0, [60.0, 60.0, 60.0]);
            (c, anchors)
        }
        "vase" => {
            let mut c = Canvas::new(|x, _| [150.0 + 0.1 * x, 170.0, 190.0]);
            c.rect(0.0, 360.0, 640.0, 480.0, [120.0, 85.0, 50.0])
                .ellipse(320.0, 260.0, 90.0, 120.0, [30.0, 110.0, 160.0], 0.45)
                .rect(295.0, 110.0, 345.0, 160.0, [30.0, 110.0, 160.0])
                .ellipse(320.0, 95.0, 60.0, 30.0, [230.0, 200.0, 60.0], 0.2)
                .ellipse(150.0, 330.0, 40.0, 40.0, [200.0, 90.0, 40.0], 0.3);
            (c, vec![(320, 260), (320, 95), (150, 330)])
        }
        "poster" => {
            let mut c = Canvas::new(|x, _| {
                if (x as u32 / 40) % 2 == 0 {
                    [235.0, 230.0, 220.0]
                } else {
                    [215.0, 205.0, 195.0]
                }
            });
            c.ellipse(200.0, 200.0, 110.0, 110.0, [220.0, 60.0, 50.0], 0.15)
                .ellipse(420.0, 260.0, 80.0, 80.0, [40.0, 60.0, 160.0], 0.15)
                .rect(80.0, 380.0, 480.0, 410.0, [20.0, 20.0, 20.0])
                .rect(80.0, 420.0, 380.0, 440.0, [20.0, 20.0, 20.0]);
            (c, vec![(200, 200), (420, 260), (280, 395)])
        }
        _ => unreachable!(),
    };
    let landmarks = code_square(&mut c, 520.0, 360.0, 84.0);
    Some(Fixture {
        name,
        image: c.render(seed_of(name)),
        landmarks,
        anchors,
    })
}

pub fn all_scenes() -> Vec<Fixture> {
    SCENE_NAMES.iter().map(|n| scene(n).expect("known scene")).collect()
}
