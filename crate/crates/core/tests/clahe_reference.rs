//! CLAHE outputs compared against values produced by OpenCV 5.0
//! (`cv2.createCLAHE(clipLimit, tileGridSize).apply`).

use evpipe_core::frame_prep::clahe;
use evpipe_core::model::Frame;

const GRADIENT_16_T2_C2: [[u8; 16]; 16] = [
    [8, 16, 28, 36, 48, 57, 61, 68, 72, 80, 88, 92, 100, 108, 120, 131],
    [16, 28, 36, 48, 60, 64, 72, 76, 84, 92, 96, 104, 108, 120, 131, 139],
    [28, 36, 48, 60, 68, 76, 80, 88, 96, 100, 108, 112, 120, 131, 139, 151],
    [36, 48, 60, 68, 80, 84, 92, 100, 104, 112, 116, 124, 131, 139, 151, 159],
    [48, 60, 68, 80, 88, 96, 104, 108, 116, 120, 128, 134, 139, 151, 159, 171],
    [57, 64, 76, 84, 96, 104, 108, 116, 120, 128, 134, 138, 147, 155, 167, 179],
    [61, 72, 80, 92, 104, 108, 116, 120, 128, 134, 138, 146, 151, 163, 175, 183],
    [68, 76, 88, 100, 108, 116, 120, 128, 134, 137, 145, 150, 159, 171, 179, 191],
    [72, 84, 96, 104, 116, 120, 128, 134, 137, 145, 149, 158, 167, 175, 187, 193],
    [80, 92, 100, 112, 120, 128, 134, 137, 145, 149, 157, 166, 171, 183, 190, 200],
    [88, 96, 108, 116, 128, 134, 138, 145, 149, 157, 166, 170, 179, 186, 197, 208],
    [92, 104, 112, 124, 134, 138, 146, 150, 158, 166, 170, 178, 182, 194, 206, 213],
    [100, 108, 120, 131, 139, 147, 151, 159, 167, 171, 179, 182, 191, 203, 211, 223],
    [108, 120, 131, 139, 151, 155, 163, 171, 175, 183, 186, 194, 203, 211, 223, 231],
    [120, 131, 139, 151, 159, 167, 175, 179, 187, 190, 197, 206, 211, 223, 231, 243],
    [131, 139, 151, 159, 171, 179, 183, 191, 193, 200, 208, 213, 223, 231, 243, 255],
];

fn max_abs_diff(a: &[u8], b: &[u8]) -> u8 {
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y)).max().unwrap_or(0)
}

#[test]
fn gradient_matches_reference() {
    let pixels = (0..16u32)
        .flat_map(|y| (0..16u32).map(move |x| ((x + y) * 8) as u8))
        .collect();
    let frame = Frame::new(0, 16, 16, pixels).unwrap();
    let out = clahe(&frame, 2, 2, 2.0);
    let expected: Vec<u8> = GRADIENT_16_T2_C2.iter().flatten().copied().collect();
    assert!(max_abs_diff(&out.pixels, &expected) <= 1);
    let exact = out.pixels.iter().zip(&expected).filter(|(a, b)| a == b).count();
    assert_eq!(exact, 256, "pixel-exact agreement expected");
}

fn textured_davis_frame() -> Frame {
    let (w, h) = (346u32, 260u32);
    let mut pixels = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let mut v = ((x * 7 + y * 13 + (x * y) % 31) % 256) as u8;
            if (100..160).contains(&y) && (50..200).contains(&x) {
                v /= 3;
            }
            pixels.push(v);
        }
    }
    Frame::new(0, w, h, pixels).unwrap()
}

#[test]
fn padded_frame_matches_reference() {
    let frame = textured_davis_frame();
    for (file, tiles, clip) in [
        ("clahe_346x260_t8_c2.u8", (8, 8), 2.0),
        ("clahe_346x260_t5x3_c3.5.u8", (5, 3), 3.5),
    ] {
        let path = format!("{}/tests/fixtures/{file}", env!("CARGO_MANIFEST_DIR"));
        let expected = std::fs::read(path).unwrap();
        let out = clahe(&frame, tiles.0, tiles.1, clip);
        let diff = max_abs_diff(&out.pixels, &expected);
        let mismatched = out.pixels.iter().zip(&expected).filter(|(a, b)| a != b).count();
        assert!(diff <= 1, "{file}: max diff {diff}");
        assert_eq!(mismatched, 0, "{file}");
    }
}
