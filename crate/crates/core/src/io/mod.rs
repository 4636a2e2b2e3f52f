//! File formats: binary feature matrices, WAV audio and PPM images.

pub mod image;
pub mod matrix;
pub mod wav;

pub use image::{hsl_to_rgb, RgbImage};
pub use matrix::{decode_matrix, encode_matrix, load_matrix, save_matrix, MatrixError};
pub use wav::{read_wav, write_wav, SampleFormat, WavError};
