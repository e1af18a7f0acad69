//! File helpers: images, frame names, JSON and `.anicode` payload files.

use std::io::Cursor;
use std::path::Path;

use image::ImageFormat;
use serde::Serialize;

use crate::imagecore::Image;

pub fn load_image(path: &Path) -> image::ImageResult<Image> {
    Ok(image::open(path)?.to_rgb8())
}

pub fn decode_image(bytes: &[u8]) -> image::ImageResult<Image> {
    Ok(image::load_from_memory(bytes)?.to_rgb8())
}

pub fn encode_png(img: &Image) -> std::io::Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(std::io::Error::other)?;
    Ok(buf.into_inner())
}

pub fn save_png(img: &Image, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, encode_png(img)?)
}

/// `frame_%05d.png`
pub fn frame_file_name(index: u32) -> String {
    format!("frame_{index:05}.png")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    std::fs::write(path, text + "\n")
}

/// Reads a payload file, ignoring one trailing line break.
pub fn read_payload(path: &Path) -> std::io::Result<String> {
    let text = std::fs::read_to_string(path)?;
    let text = text.strip_suffix('\n').unwrap_or(&text);
    Ok(text.strip_suffix('\r').unwrap_or(text).to_string())
}

pub fn write_payload(path: &Path, payload: &str) -> std::io::Result<()> {
    std::fs::write(path, format!("{payload}\n"))
}
