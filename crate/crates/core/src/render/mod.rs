//! Camera, ray casting and image output.

pub mod camera;
pub mod image;
pub mod raycast;

pub use camera::{Camera, ViewFrame};
pub use image::{decode_png, encode_png, save_image, Framebuffer};
pub use raycast::{
    ess_advance, march, render, Accel, EssMode, RayResult, RenderSettings, RenderStats, SampleRay,
};
