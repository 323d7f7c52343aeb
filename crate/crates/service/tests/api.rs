use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use image::{Rgb, RgbImage};
use tower::ServiceExt;
use ukiyo_core::color::{compose, decompose, estimate_palette, layer_image};
use ukiyo_core::raster::{encode_rgb_png, encode_rgba_png};
use ukiyo_core::RgbRaster;
use ukiyo_service::{router, DecomposeResponse, ServiceConfig};

const A: [u8; 3] = [30, 60, 200];
const B: [u8; 3] = [240, 200, 20];
const BOUNDARY: &str = "ukiyo-test-boundary";

fn two_color_png() -> Vec<u8> {
    let img = RgbImage::from_fn(12, 9, |x, y| if (x + 2 * y) % 3 == 0 { Rgb(A) } else { Rgb(B) });
    encode_rgb_png(&img).unwrap()
}

fn multipart(bytes: &[u8]) -> Body {
    let mut body = format!(
        "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"image\"; filename=\"a.png\"\r\nContent-Type: image/png\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(bytes);
    body.extend_from_slice(format!("\r\n--{BOUNDARY}--\r\n").as_bytes());
    Body::from(body)
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn upload(app: &Router, png: &[u8], query: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::post(format!("/api/decompose?{query}"))
        .header("content-type", format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(multipart(png))
        .unwrap();
    send(app, req).await
}

async fn decomposed(app: &Router, png: &[u8], query: &str) -> DecomposeResponse {
    let (status, body) = upload(app, png, query).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    serde_json::from_slice(&body).unwrap()
}

async fn recolor(app: &Router, id: &str, json: serde_json::Value) -> (StatusCode, Vec<u8>) {
    let req = Request::post(format!("/api/sessions/{id}/recolor"))
        .header("content-type", "application/json")
        .body(Body::from(json.to_string()))
        .unwrap();
    send(app, req).await
}

fn unit(c: [u8; 3]) -> [f64; 3] {
    c.map(|v| f64::from(v) / 255.0)
}

#[tokio::test]
async fn two_color_image_decomposes_to_its_colors() {
    let app = router(ServiceConfig::default());
    let info = decomposed(&app, &two_color_png(), "k=2").await;
    assert_eq!(info.session_id.len(), 32);
    assert_eq!((info.width, info.height), (12, 9));
    assert_eq!(info.palette, vec![unit(A), unit(B)]);
    assert_eq!(info.max_clip_error, 0.0);
}

#[tokio::test]
async fn default_layer_count_is_six() {
    let img = RgbImage::from_fn(16, 16, |x, y| Rgb([(x * 16) as u8, (y * 16) as u8, ((x + y) * 8) as u8]));
    let app = router(ServiceConfig::default());
    let info = decomposed(&app, &encode_rgb_png(&img).unwrap(), "").await;
    assert_eq!(info.palette.len(), 6);
}

#[tokio::test]
async fn bad_uploads_are_rejected() {
    let app = router(ServiceConfig::default());
    assert_eq!(upload(&app, &two_color_png(), "k=0").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(upload(&app, &two_color_png(), "k=3").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(upload(&app, &two_color_png(), "k=two").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(upload(&app, b"not an image", "k=2").await.0, StatusCode::BAD_REQUEST);

    let small = router(ServiceConfig { max_side: 10, ..ServiceConfig::default() });
    assert_eq!(upload(&small, &two_color_png(), "k=2").await.0, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn layers_match_the_files_the_cli_writes() {
    let app = router(ServiceConfig::default());
    let png = two_color_png();
    let info = decomposed(&app, &png, "k=2&lambda=0.05&seed=7").await;

    let source = RgbRaster::decode(&png).unwrap();
    let stack = decompose(&source, &estimate_palette(&source, 2, 7).unwrap(), 0.05).unwrap();
    for k in 0..2 {
        let (status, body) = send(&app, Request::get(format!("/api/sessions/{}/layers/{k}", info.session_id)).body(Body::empty()).unwrap()).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body, encode_rgba_png(&layer_image(&stack, k)).unwrap());
        assert!(image::load_from_memory(&body).unwrap().color().has_alpha());
    }

    let get = |path: String| Request::get(path).body(Body::empty()).unwrap();
    let (status, _) = send(&app, get(format!("/api/sessions/{}/layers/2", info.session_id))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = send(&app, get(format!("/api/sessions/{}/layers/0", "0".repeat(32)))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn base_palette_recolor_is_stable_and_equals_the_composition() {
    let app = router(ServiceConfig::default());
    let png = two_color_png();
    let info = decomposed(&app, &png, "k=2").await;
    let body = serde_json::json!({ "colors": info.palette });

    let (status, first) = recolor(&app, &info.session_id, body.clone()).await;
    assert_eq!(status, StatusCode::OK);
    let source = RgbRaster::decode(&png).unwrap();
    let stack = decompose(&source, &estimate_palette(&source, 2, 0).unwrap(), 0.05).unwrap();
    assert_eq!(first, encode_rgb_png(&compose(&stack).to_rgb8()).unwrap());
    assert_eq!(image::load_from_memory(&first).unwrap().to_rgb8(), image::load_from_memory(&png).unwrap().to_rgb8());
    for _ in 0..3 {
        assert_eq!(recolor(&app, &info.session_id, body.clone()).await.1, first);
    }
}

#[tokio::test]
async fn swapping_colors_swaps_the_image() {
    let app = router(ServiceConfig::default());
    let info = decomposed(&app, &two_color_png(), "k=2").await;
    let swapped = serde_json::json!({ "colors": [info.palette[1], info.palette[0]] });
    let (status, body) = recolor(&app, &info.session_id, swapped).await;
    assert_eq!(status, StatusCode::OK);
    let out = image::load_from_memory(&body).unwrap().to_rgb8();
    for (x, y, px) in out.enumerate_pixels() {
        let expected = if (x + 2 * y) % 3 == 0 { B } else { A };
        assert_eq!(px.0, expected, "pixel ({x}, {y})");
    }
}

#[tokio::test]
async fn recolor_errors() {
    let app = router(ServiceConfig::default());
    let info = decomposed(&app, &two_color_png(), "k=2").await;
    let one = serde_json::json!({ "colors": [[0.5, 0.5, 0.5]] });
    assert_eq!(recolor(&app, &info.session_id, one.clone()).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(recolor(&app, &"f".repeat(32), one).await.0, StatusCode::NOT_FOUND);
    let garbage = serde_json::json!({ "palette": 3 });
    assert_eq!(recolor(&app, &info.session_id, garbage).await.0, StatusCode::BAD_REQUEST);
    let missing = serde_json::json!({ "reference_session": "nope" });
    assert_eq!(recolor(&app, &info.session_id, missing).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn reference_session_transfers_its_palette() {
    let app = router(ServiceConfig::default());
    let target = decomposed(&app, &two_color_png(), "k=2").await;
    let (c, d) = ([10u8, 10, 10], [250u8, 250, 250]);
    let reference = RgbImage::from_fn(4, 4, |x, _| if x < 2 { Rgb(c) } else { Rgb(d) });
    let reference = decomposed(&app, &encode_rgb_png(&reference).unwrap(), "k=2").await;

    let (status, body) =
        recolor(&app, &target.session_id, serde_json::json!({ "reference_session": reference.session_id })).await;
    assert_eq!(status, StatusCode::OK);
    // A is darker than B, so A's layer takes the darker reference color
    let out = image::load_from_memory(&body).unwrap().to_rgb8();
    for (x, y, px) in out.enumerate_pixels() {
        let expected = if (x + 2 * y) % 3 == 0 { c } else { d };
        assert_eq!(px.0, expected);
    }
}

#[tokio::test]
async fn sessions_are_evicted_beyond_capacity() {
    let config = ServiceConfig { max_sessions: 2.try_into().unwrap(), ..ServiceConfig::default() };
    let app = router(config);
    let png = two_color_png();
    let first = decomposed(&app, &png, "k=2").await;
    decomposed(&app, &png, "k=2").await;
    decomposed(&app, &png, "k=2").await;
    let req = Request::get(format!("/api/sessions/{}/layers/0", first.session_id)).body(Body::empty()).unwrap();
    assert_eq!(send(&app, req).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn index_page_is_served() {
    let app = router(ServiceConfig::default());
    let (status, body) = send(&app, Request::get("/").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("/api/decompose"));
}
