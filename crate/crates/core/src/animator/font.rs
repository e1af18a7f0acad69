//! 5x7 bitmap font covering the QR alphanumeric set, drawn at 3x scale in
//! white with a one pixel black outline.

use image::Rgb;

use crate::imagecore::{Image, Mask};

pub const SCALE: u32 = 3;
pub const MARGIN: u32 = 8;
const GLYPH_W: u32 = 5;
const GLYPH_H: u32 = 7;
const ADVANCE: u32 = (GLYPH_W + 1) * SCALE;
const LINE: u32 = (GLYPH_H + 2) * SCALE;

fn glyph(c: char) -> [u8; 7] {
    match c {
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        'A' => [0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11],
        'B' => [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
        'C' => [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
        'D' => [0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'F' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
        'G' => [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F],
        'H' => [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'I' => [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'J' => [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C],
        'K' => [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
        'L' => [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F],
        'M' => [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
        'N' => [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11],
        'O' => [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'Q' => [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        'S' => [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E],
        'T' => [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
        'U' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'V' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04],
        'W' => [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A],
        'X' => [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11],
        'Y' => [0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04],
        'Z' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F],
        '$' => [0x04, 0x0F, 0x14, 0x0E, 0x05, 0x1E, 0x04],
        '%' => [0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03],
        '*' => [0x00, 0x04, 0x15, 0x0E, 0x15, 0x04, 0x00],
        '+' => [0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00],
        '-' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        '/' => [0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00],
        ':' => [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00],
        _ => [0; 7],
    }
}

/// Splits text into lines that fit between the margins.
fn layout(text: &str, width: u32) -> Vec<Vec<char>> {
    let per_line = ((width.saturating_sub(2 * MARGIN)) / ADVANCE).max(1) as usize;
    let chars: Vec<char> = text.chars().collect();
    chars.chunks(per_line).map(<[char]>::to_vec).collect()
}

/// Mask of the glyph strokes for `text` on a `width` x `height` canvas.
pub fn text_mask(text: &str, width: u32, height: u32) -> Mask {
    let mut m = Mask::new(width, height);
    for (row, line) in layout(text, width).iter().enumerate() {
        let y0 = MARGIN + row as u32 * LINE;
        for (col, &c) in line.iter().enumerate() {
            let x0 = MARGIN + col as u32 * ADVANCE;
            for (gy, bits) in glyph(c).iter().enumerate() {
                for gx in 0..GLYPH_W {
                    if bits & (0x10 >> gx) == 0 {
                        continue;
                    }
                    for sy in 0..SCALE {
                        for sx in 0..SCALE {
                            let (x, y) = (x0 + gx * SCALE + sx, y0 + gy as u32 * SCALE + sy);
                            if x < width && y < height {
                                m.set(x, y, true);
                            }
                        }
                    }
                }
            }
        }
    }
    m
}

/// Inclusive-exclusive box `(x0, y0, x1, y1)` that drawing `text` may touch.
pub fn text_bounds(text: &str, width: u32, height: u32) -> (u32, u32, u32, u32) {
    let lines = layout(text, width);
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0) as u32;
    let x1 = (MARGIN + cols * ADVANCE + 1).min(width);
    let y1 = (MARGIN + lines.len() as u32 * LINE + 1).min(height);
    (MARGIN - 1, MARGIN - 1, x1, y1)
}

/// Draws white text with a black 1 px outline at the top-left corner.
pub fn draw_text(img: &mut Image, text: &str) {
    let (w, h) = img.dimensions();
    let strokes = text_mask(text, w, h);
    for y in 0..h {
        for x in 0..w {
            if strokes.get(x, y) {
                img.put_pixel(x, y, Rgb([255, 255, 255]));
                continue;
            }
            let near = (-1i64..=1).any(|dy| {
                (-1i64..=1).any(|dx| strokes.get_signed(x as i64 + dx, y as i64 + dy))
            });
            if near {
                img.put_pixel(x, y, Rgb([0, 0, 0]));
            }
        }
    }
}
