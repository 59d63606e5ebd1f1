use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use futures_util::{SinkExt, StreamExt};
use http_body_util::BodyExt;
use pdm_core::accel::combine;
use pdm_core::render::decode_png;
use pdm_core::{select_partitions, synth_volume, tf_archetype, Archetype, SynthKind, TransferFunction};
use pdm_service::{router, AppState, Session, SessionConfig};
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

async fn call(state: &AppState, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(state: &AppState, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let (s, b) = call(state, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

fn session(n: usize) -> AppState {
    let volume = synth_volume(SynthKind::SphereShell, [40, 36, 32], 4).unwrap();
    let config = SessionConfig { partitions: n, ..Default::default() };
    AppState::with_session(Session::new(volume, config).unwrap())
}

#[tokio::test]
async fn info_before_load_is_a_conflict() {
    let state = AppState::new();
    let (status, body) = call_json(&state, "GET", "/api/info", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "no_session");
    let (status, _) = call_json(&state, "POST", "/api/tf", Some(tf_archetype::<f64>(Archetype::Tf2, 8).unwrap().to_json())).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn synth_load_reports_dims_and_full_histogram() {
    let state = AppState::new();
    let req = json!({"synth": "noise", "dims": [64, 64, 64], "seed": 2, "partitions": 16});
    let (status, body) = call_json(&state, "POST", "/api/volume", Some(req.to_string())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, info) = call_json(&state, "GET", "/api/info", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(info["dims"], json!([64, 64, 64]));
    assert_eq!(info["n"], 16);
    assert_eq!(info["pdm_memory_bytes"], 65536);
    let hist: Vec<u64> = serde_json::from_value(info["histogram"].clone()).unwrap();
    assert_eq!(hist.len(), 256);
    assert_eq!(hist.iter().sum::<u64>(), 64 * 64 * 64);
}

#[tokio::test]
async fn bad_volume_requests() {
    let state = AppState::new();
    for body in [
        json!({"synth": "sphere_shell", "path": "/x.raw"}),
        json!({}),
        json!({"synth": "sphere_shell", "partitions": 0}),
    ] {
        let (status, _) = call_json(&state, "POST", "/api/volume", Some(body.to_string())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
    }
    let (status, body) =
        call_json(&state, "POST", "/api/volume", Some(json!({"path": "/nonexistent/v.raw"}).to_string())).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "io");
    assert!(state.session().await.is_none());
}

#[tokio::test]
async fn tf_updates_keep_combined_map_current() {
    let state = session(32);
    let s = state.session().await.unwrap();
    let zero = TransferFunction::zero(8).unwrap();
    let (status, body) = call_json(&state, "POST", "/api/tf", Some(zero.to_json())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["selection"], json!([]));
    assert_eq!(body["dprime_nonzero_fraction"], 0.0);

    let tf2: TransferFunction = tf_archetype(Archetype::Tf2, 8).unwrap();
    let (_, body) = call_json(&state, "POST", "/api/tf", Some(tf2.to_json())).await;
    assert_eq!(body["selection"], json!((1..=32).collect::<Vec<_>>()));

    let band = pdm_core::tf_band::<f64>(8, 150, 230, 0.3).unwrap();
    let (_, first) = call_json(&state, "POST", "/api/tf", Some(band.to_json())).await;
    let (_, second) = call_json(&state, "POST", "/api/tf", Some(band.to_json())).await;
    assert_eq!(first["selection"], second["selection"]);
    assert_eq!(first["dprime_checksum"], second["dprime_checksum"]);
    let expect = combine(&s.pdms, &select_partitions(&band, &s.pdms.scheme).unwrap()).unwrap();
    assert_eq!(second["dprime_checksum"], expect.checksum());
    assert_eq!(s.current().dprime, expect);
    assert!(second["select_ms"].as_f64().unwrap() >= 0.0);
}

#[tokio::test]
async fn malformed_tf_leaves_session_unchanged() {
    let state = session(16);
    let before = state.session().await.unwrap().current().dprime.checksum();
    for body in ["{", r#"{"bits": 8, "lut": [[0,0,0,0]]}"#, &tf_archetype::<f64>(Archetype::Tf3, 10).unwrap().to_json()] {
        let (status, resp) = call_json(&state, "POST", "/api/tf", Some(body.to_string())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert_eq!(resp["code"], "invalid_tf");
    }
    assert_eq!(state.session().await.unwrap().current().dprime.checksum(), before);
}

#[tokio::test]
async fn frames_are_identical_across_skipping_modes() {
    let state = session(64);
    let mut images = Vec::new();
    for ess in ["none", "block", "distance", "pdm"] {
        let uri = format!("/api/frame?angle=0.7&w=48&h=40&ess={ess}");
        let (status, png) = call(&state, "GET", &uri, None).await;
        assert_eq!(status, StatusCode::OK);
        let fb = decode_png(&png).unwrap();
        assert_eq!((fb.width, fb.height), (48, 40));
        images.push(fb);
    }
    assert!(images.windows(2).all(|w| w[0] == w[1]));
    let (status, body) = call_json(&state, "GET", "/api/frame?w=0&h=10", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "bad_request");
    let (status, _) = call_json(&state, "GET", "/api/frame?ess=octree", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

async fn spawn(state: AppState) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(pdm_service::serve(listener, state));
    format!("ws://{addr}/api/stream")
}

async fn ask(ws: &mut (impl SinkExt<Message> + StreamExt<Item = Result<Message, tokio_tungstenite::tungstenite::Error>> + Unpin), msg: Value) -> Value {
    ws.send(Message::Text(msg.to_string().into())).await.ok().unwrap();
    match ws.next().await.unwrap().unwrap() {
        Message::Text(t) => serde_json::from_str(&t).unwrap(),
        other => panic!("unexpected message {other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn stream_answers_each_request() {
    use base64::Engine;
    let state = session(64);
    let tf3 = tf_archetype(Archetype::Tf3, 8).unwrap();
    state.session().await.unwrap().set_tf(tf3).unwrap();
    let url = spawn(state).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();

    let a = ask(&mut ws, json!({"angle": 0.0, "w": 32, "h": 32, "ess": "none", "step": 0.5})).await;
    let b = ask(&mut ws, json!({"angle": std::f64::consts::TAU, "w": 32, "h": 32, "ess": "pdm", "step": 0.5})).await;
    assert_eq!(a["type"], "frame");
    assert_eq!(b["frame_id"].as_u64().unwrap(), a["frame_id"].as_u64().unwrap() + 1);
    let decode = |v: &Value| {
        let bytes = base64::engine::general_purpose::STANDARD.decode(v["image"].as_str().unwrap()).unwrap();
        decode_png(&bytes).unwrap()
    };
    assert_eq!(decode(&a), decode(&b));
    assert_ne!(a["render_stats"]["samples_evaluated"], b["render_stats"]["samples_evaluated"]);

    let err = ask(&mut ws, json!({"angle": "left"})).await;
    assert_eq!(err["type"], "error");
    assert_eq!(err["code"], "bad_request");
    let err = ask(&mut ws, json!({"w": 0})).await;
    assert_eq!(err["type"], "error");
    // still open
    let c = ask(&mut ws, json!({"w": 8, "h": 8})).await;
    assert_eq!(c["type"], "frame");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn frames_during_updates_match_one_whole_function() {
    let state = session(32);
    let s = state.session().await.unwrap();
    let tfs: Vec<TransferFunction> = vec![
        tf_archetype(Archetype::Tf3, 8).unwrap(),
        pdm_core::tf_band(8, 40, 90, 0.4).unwrap(),
    ];
    let req = pdm_service::FrameRequest {
        angle: 0.4,
        width: 24,
        height: 24,
        ess: pdm_core::EssMode::Pdm,
        step: 0.5,
        elevation: 0.3,
    };
    // reference images for each function, rendered without skipping
    let mut reference = Vec::new();
    for tf in &tfs {
        s.set_tf(tf.clone()).unwrap();
        reference.push(s.render(&pdm_service::FrameRequest { ess: pdm_core::EssMode::None, ..req }).unwrap().image);
    }
    let writer = {
        let s = Arc::clone(&s);
        let tfs = tfs.clone();
        tokio::task::spawn_blocking(move || {
            for i in 0..40 {
                s.set_tf(tfs[i % 2].clone()).unwrap();
            }
        })
    };
    let reader = {
        let s = Arc::clone(&s);
        tokio::task::spawn_blocking(move || (0..40).map(|_| s.render(&req).unwrap().image).collect::<Vec<_>>())
    };
    writer.await.unwrap();
    for img in reader.await.unwrap() {
        assert!(reference.contains(&img));
    }
}
