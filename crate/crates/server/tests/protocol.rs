use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use scenetalk_core::harness::ScriptBundle;
use scenetalk_core::scene::Scene;
use scenetalk_core::scenefile::BundledScene;
use scenetalk_core::session::{NavKind, Session, TurnOutcome};
use scenetalk_server::{Body, Hub, SESSION_OCCUPIED, WireMessage, serve};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream, connect_async};

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start() -> SocketAddr {
    let bundle = ScriptBundle::demo_room_walkthrough();
    let session = Session::new(BundledScene::DemoRoom.load(), Arc::new(bundle.backend()));
    let (hub, _thread) = Hub::spawn(session);
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, hub));
    addr
}

async fn connect(addr: SocketAddr, role: &str) -> Socket {
    connect_async(format!("ws://{addr}/ws?role={role}")).await.unwrap().0
}

async fn recv(ws: &mut Socket) -> Option<WireMessage> {
    let frame = tokio::time::timeout(Duration::from_secs(10), ws.next())
        .await
        .expect("message within timeout");
    match frame? {
        Ok(Message::Text(text)) => Some(serde_json::from_str(&text).unwrap()),
        Ok(Message::Close(_)) | Err(_) => None,
        Ok(other) => panic!("unexpected frame {other:?}"),
    }
}

async fn send(ws: &mut Socket, seq: u64, body: Body) {
    let text = serde_json::to_string(&WireMessage { seq, body }).unwrap();
    ws.send(Message::Text(text.into())).await.unwrap();
}

fn say(text: &str) -> Body {
    Body::UserInput { text: text.into() }
}

fn nav(kind: NavKind) -> Body {
    Body::Nav { kind, magnitude: None }
}

async fn snapshot_of(ws: &mut Socket) -> Scene {
    match recv(ws).await.unwrap().body {
        Body::Snapshot { scene } => scene,
        other => panic!("expected snapshot, got {}", other.kind()),
    }
}

fn http_get(addr: SocketAddr, path: &str) -> String {
    ureq::get(format!("http://{addr}{path}"))
        .call()
        .unwrap()
        .body_mut()
        .read_to_string()
        .unwrap()
}

async fn get(addr: SocketAddr, path: &'static str) -> String {
    tokio::task::spawn_blocking(move || http_get(addr, path)).await.unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn modify_turn_orders_reply_utterance_delta() {
    let addr = start().await;
    let mut ws = connect(addr, "driver").await;
    let first = recv(&mut ws).await.unwrap();
    assert_eq!(first.seq, 1);
    assert!(matches!(first.body, Body::Snapshot { .. }));

    send(&mut ws, 1, say("Make the color of the cube the same as the sphere.")).await;
    let mut kinds = Vec::new();
    let mut last = first.seq;
    for _ in 0..3 {
        let msg = recv(&mut ws).await.unwrap();
        assert!(msg.seq > last);
        last = msg.seq;
        if let Body::Reply(r) = &msg.body {
            assert_eq!(r.outcome, TurnOutcome::Applied);
        }
        kinds.push(msg.body.kind());
    }
    assert_eq!(kinds, ["reply", "utterance", "scene_delta"]);

    send(&mut ws, 2, say("What is the color of the cube now?")).await;
    let kinds: Vec<_> = [recv(&mut ws).await, recv(&mut ws).await]
        .into_iter()
        .map(|m| m.unwrap().body.kind())
        .collect();
    assert_eq!(kinds, ["reply", "utterance"]);

    let transcript = get(addr, "/transcript").await;
    assert_eq!(transcript.lines().count(), 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn second_driver_is_rejected_until_the_first_leaves() {
    let addr = start().await;
    let mut first = connect(addr, "driver").await;
    snapshot_of(&mut first).await;

    let mut second = connect(addr, "driver").await;
    match recv(&mut second).await.unwrap().body {
        Body::Error { message } => assert_eq!(message, SESSION_OCCUPIED),
        other => panic!("expected error, got {}", other.kind()),
    }
    assert!(recv(&mut second).await.is_none());

    first.close(None).await.unwrap();
    drop(first);
    let mut third = None;
    for _ in 0..50 {
        let mut ws = connect(addr, "driver").await;
        if matches!(recv(&mut ws).await.map(|m| m.body), Some(Body::Snapshot { .. })) {
            third = Some(ws);
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    assert!(third.is_some(), "driver seat was not released");
}

#[tokio::test(flavor = "multi_thread")]
async fn protocol_violations_close_the_connection() {
    let addr = start().await;
    let mut observer = connect(addr, "observer").await;
    snapshot_of(&mut observer).await;
    send(&mut observer, 1, say("Mute all speakers")).await;
    assert!(matches!(recv(&mut observer).await.unwrap().body, Body::Error { .. }));
    assert!(recv(&mut observer).await.is_none());

    let mut driver = connect(addr, "driver").await;
    snapshot_of(&mut driver).await;
    driver.send(Message::Text("{\"seq\":1,\"type\":\"bogus\"}".into())).await.unwrap();
    assert!(matches!(recv(&mut driver).await.unwrap().body, Body::Error { .. }));
    assert!(recv(&mut driver).await.is_none());

    let mut driver = connect(addr, "driver").await;
    snapshot_of(&mut driver).await;
    send(&mut driver, 5, nav(NavKind::MoveForward)).await;
    assert!(matches!(recv(&mut driver).await.unwrap().body, Body::SceneDelta(_)));
    send(&mut driver, 5, nav(NavKind::MoveForward)).await;
    match recv(&mut driver).await.unwrap().body {
        Body::Error { message } => assert!(message.contains("sequence"), "{message}"),
        other => panic!("expected error, got {}", other.kind()),
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn empty_input_errors_only_to_the_driver() {
    let addr = start().await;
    let mut observer = connect(addr, "observer").await;
    snapshot_of(&mut observer).await;
    let mut driver = connect(addr, "driver").await;
    snapshot_of(&mut driver).await;
    send(&mut driver, 1, say("   ")).await;
    assert!(matches!(recv(&mut driver).await.unwrap().body, Body::Error { .. }));
    send(&mut driver, 2, nav(NavKind::PanLeft)).await;
    assert!(matches!(recv(&mut driver).await.unwrap().body, Body::SceneDelta(_)));
    // the observer sees the pan but never the driver's error
    assert!(matches!(recv(&mut observer).await.unwrap().body, Body::SceneDelta(_)));
}

#[tokio::test(flavor = "multi_thread")]
async fn ssg_dump_on_request_and_over_http() {
    let addr = start().await;
    let mut ws = connect(addr, "observer").await;
    snapshot_of(&mut ws).await;
    ws.send(Message::Text(r#"{"seq":1,"type":"ssg_dump","payload":{}}"#.into()))
        .await
        .unwrap();
    let Body::SsgDump { ssg } = recv(&mut ws).await.unwrap().body else {
        panic!("expected ssg_dump");
    };
    let over_http = get(addr, "/ssg").await;
    assert_eq!(ssg, over_http);
    let graph: serde_json::Value = serde_json::from_str(&ssg).unwrap();
    assert!(graph.is_object());
}

/// Observers replay every delta onto their snapshot and end equal to the
/// driver, including the highlight that expires on the server's own clock.
#[tokio::test(flavor = "multi_thread")]
async fn observers_mirror_the_driver() {
    let addr = start().await;
    let mut early = connect(addr, "observer").await;
    let mut early_scene = snapshot_of(&mut early).await;
    let mut driver = connect(addr, "driver").await;
    let mut driver_scene = snapshot_of(&mut driver).await;

    let steps = [
        say("Make the color of the cube the same as the sphere."),
        nav(NavKind::MoveForward),
        nav(NavKind::PanRight),
        say("Mute all speakers"),
        say("Grab one of the speakers onto my hand."),
        say("Highlight the torch so I can find it."),
    ];
    for (i, body) in steps.into_iter().enumerate() {
        send(&mut driver, i as u64 + 1, body).await;
    }

    let mut late: Option<(Socket, Scene)> = None;
    let mut expiries = 0;
    while expiries == 0 {
        let msg = recv(&mut driver).await.unwrap();
        if let Body::SceneDelta(delta) = msg.body {
            delta.apply_forward(&mut driver_scene).unwrap();
            if !delta.removed.is_empty() {
                expiries += 1;
            }
            if late.is_none() && delta.created.iter().any(|o| o.is_transient()) {
                let mut ws = connect(addr, "observer").await;
                let scene = snapshot_of(&mut ws).await;
                late = Some((ws, scene));
            }
        }
    }
    let truth: Scene = serde_json::from_str(&get(addr, "/snapshot").await).unwrap();
    assert_eq!(driver_scene, truth);
    assert_eq!(truth.clock(), 5.0);
    assert!(truth.objects().iter().all(|o| !o.is_transient()));

    let (mut late_ws, mut late_scene) = late.expect("late observer joined");
    for (ws, scene) in [(&mut early, &mut early_scene), (&mut late_ws, &mut late_scene)] {
        while *scene != truth {
            match recv(ws).await.unwrap().body {
                Body::SceneDelta(delta) => delta.apply_forward(scene).unwrap(),
                Body::Reply(_) | Body::Utterance(_) => {}
                other => panic!("unexpected {}", other.kind()),
            }
        }
    }
}
