use super::*;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};

fn chat_payload(text: &str) -> String {
    serde_json::json!({
        "model": "fixture",
        "choices": [{"message": {"content": text}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": 7, "completion_tokens": 3},
    })
    .to_string()
}

/// Minimal single-purpose HTTP server: answers `count` requests with the
/// (status, body) pairs produced by `handler`, then exits.
fn fixture_server<F>(count: usize, handler: F) -> (String, std::thread::JoinHandle<usize>)
where
    F: Fn(usize, &str) -> (u16, String) + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let mut served = 0;
        for i in 0..count {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let body = loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                let text = String::from_utf8_lossy(&buf);
                if let Some(split) = text.find("\r\n\r\n") {
                    let header = &text[..split];
                    let length: usize = header
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse().unwrap()))
                        .unwrap_or(0);
                    let have = buf.len() - (split + 4);
                    if have >= length {
                        break text[split + 4..].to_string();
                    }
                }
                if n == 0 {
                    break String::new();
                }
            };
            let (status, payload) = handler(i, &body);
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
            served += 1;
        }
        served
    });
    (format!("http://{addr}/v1/chat/completions"), handle)
}

fn test_endpoint(url: String) -> EndpointConfig {
    EndpointConfig {
        base_url: url,
        model_name: "fixture".into(),
        max_retries: 3,
        backoff_base_ms: 5,
        timeout_secs: 10,
        ..EndpointConfig::default()
    }
}

#[test]
fn complete_returns_first_choice_text() {
    let (url, handle) = fixture_server(1, |_, body| {
        assert!(body.contains("\"messages\""));
        assert!(body.contains("\"model\":\"fixture\""));
        (200, chat_payload("OK"))
    });
    let client = Client::new(test_endpoint(url)).unwrap();
    let resp = client.complete(&client.default_request("hello".into())).unwrap();
    assert_eq!(resp.text, "OK");
    assert_eq!(resp.finish_reason.as_deref(), Some("stop"));
    assert_eq!(resp.prompt_tokens, Some(7));
    assert_eq!(handle.join().unwrap(), 1);
}

#[test]
fn retries_on_429_then_succeeds() {
    let (url, handle) = fixture_server(3, |i, _| {
        if i < 2 {
            (429, "{\"error\": \"slow down\"}".into())
        } else {
            (200, chat_payload("after retries"))
        }
    });
    let client = Client::new(test_endpoint(url)).unwrap();
    let resp = client.complete(&client.default_request("x".into())).unwrap();
    assert_eq!(resp.text, "after retries");
    assert_eq!(handle.join().unwrap(), 3);
}

#[test]
fn retries_exhausted_reports_last_status() {
    let (url, handle) = fixture_server(4, |_, _| (503, "{}".into()));
    let mut endpoint = test_endpoint(url);
    endpoint.max_retries = 3;
    let client = Client::new(endpoint).unwrap();
    let err = client.complete(&client.default_request("x".into())).unwrap_err();
    match err {
        ClientError::Transport {
            last_status,
            attempts,
            ..
        } => {
            assert_eq!(last_status, Some(503));
            assert_eq!(attempts, 4);
        }
        other => panic!("unexpected error {other:?}"),
    }
    handle.join().unwrap();
}

#[test]
fn client_errors_fail_fast() {
    let (url, handle) = fixture_server(1, |_, _| (404, "{}".into()));
    let client = Client::new(test_endpoint(url)).unwrap();
    let err = client.complete(&client.default_request("x".into())).unwrap_err();
    assert!(matches!(
        err,
        ClientError::Transport {
            last_status: Some(404),
            attempts: 1,
            ..
        }
    ));
    handle.join().unwrap();
}

#[test]
fn unreachable_host_is_a_transport_error() {
    let mut endpoint = test_endpoint("http://127.0.0.1:9/unroutable".into());
    endpoint.max_retries = 0;
    let client = Client::new(endpoint).unwrap();
    let err = client.complete(&client.default_request("x".into())).unwrap_err();
    assert!(matches!(err, ClientError::Transport { last_status: None, .. }));
}

#[test]
fn malformed_payload_is_a_protocol_error() {
    let (url, handle) = fixture_server(1, |_, _| (200, "{\"nonsense\": true}".into()));
    let client = Client::new(test_endpoint(url)).unwrap();
    let err = client.complete(&client.default_request("x".into())).unwrap_err();
    assert!(matches!(err, ClientError::Protocol { .. }));
    handle.join().unwrap();
}

#[test]
fn missing_auth_variable_is_a_config_error() {
    let mut endpoint = test_endpoint("http://127.0.0.1:1/".into());
    endpoint.auth_env = Some("SKIC_TEST_KEY_THAT_DOES_NOT_EXIST".into());
    let client = Client::new(endpoint).unwrap();
    let err = client.complete(&client.default_request("x".into())).unwrap_err();
    assert!(matches!(err, ClientError::Config(_)));
}

#[test]
fn cache_round_trip_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cache = DiskCache::open(dir.path()).unwrap();
    let hits = AtomicUsize::new(0);
    let (url, handle) = fixture_server(2, move |_, _| {
        hits.fetch_add(1, Ordering::SeqCst);
        (200, chat_payload("cached me"))
    });
    let client = Client::new(test_endpoint(url)).unwrap();
    let request = client.default_request("the prompt".into());

    let (first, hit) = client.cached_complete(&cache, CacheMode::Record, &request).unwrap();
    assert!(!hit);
    let (second, hit) = client.cached_complete(&cache, CacheMode::Record, &request).unwrap();
    assert!(hit);
    assert_eq!(first.text, second.text);
    assert_eq!(cache.len(), 1);

    // different sampling params → different key → second network call
    let mut warmer = request.clone();
    warmer.temperature = 0.7;
    let (_, hit) = client.cached_complete(&cache, CacheMode::Record, &warmer).unwrap();
    assert!(!hit);
    assert_eq!(cache.len(), 2);
    assert_eq!(handle.join().unwrap(), 2);

    // replay hits are served without a server
    let offline = Client::new(test_endpoint("http://127.0.0.1:1/".into())).unwrap();
    let (replayed, hit) = offline.cached_complete(&cache, CacheMode::Replay, &request).unwrap();
    assert!(hit);
    assert_eq!(replayed.text, "cached me");

    let novel = offline.default_request("never recorded".into());
    let err = offline.cached_complete(&cache, CacheMode::Replay, &novel).unwrap_err();
    assert!(matches!(err, ClientError::MissingRecording(_)));
}

#[test]
fn cache_keys_are_stable_and_sensitive() {
    let request = CompletionRequest {
        prompt: "p".into(),
        temperature: 0.0,
        max_tokens: 128,
    };
    let a = cache_key("m", &request);
    let b = cache_key("m", &request);
    assert_eq!(a, b);
    assert_eq!(a.len(), 64);
    assert_ne!(a, cache_key("other-model", &request));
    let mut warmer = request.clone();
    warmer.temperature = 1.0;
    assert_ne!(a, cache_key("m", &warmer));
}

#[test]
fn in_flight_requests_never_exceed_limit() {
    let active = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let (active2, peak2) = (active.clone(), peak.clone());
    let (url, handle) = fixture_server(8, move |_, _| {
        let now = active2.fetch_add(1, Ordering::SeqCst) + 1;
        peak2.fetch_max(now, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(30));
        active2.fetch_sub(1, Ordering::SeqCst);
        (200, chat_payload("ok"))
    });
    let mut endpoint = test_endpoint(url);
    endpoint.max_in_flight = 2;
    let client = Arc::new(Client::new(endpoint).unwrap());
    let workers: Vec<_> = (0..8)
        .map(|i| {
            let client = client.clone();
            std::thread::spawn(move || {
                client
                    .complete(&client.default_request(format!("req {i}")))
                    .unwrap()
            })
        })
        .collect();
    for w in workers {
        w.join().unwrap();
    }
    handle.join().unwrap();
    assert!(peak.load(Ordering::SeqCst) <= 2, "peak {}", peak.load(Ordering::SeqCst));
}

#[test]
fn oracle_backend_answers_from_gold_traces() {
    let inst = crate::tasks::generate(TaskFamily::DynProg, 4, 99).unwrap();
    let prompt = format!(
        "skills...\n\nExample: question\n\nAnswer:{}",
        oracle_trailer(inst.family, inst.level, inst.seed, &inst.id)
    );
    let resp = oracle_backend(&prompt).unwrap();
    assert!(resp.text.contains("The highest sum is D[0]="));
    let got = crate::traces::extract_answer(&resp.text, TaskFamily::DynProg).unwrap();
    assert!(got.matches(&inst.gold_answer));

    let add = crate::tasks::generate(TaskFamily::Addition, 3, 4).unwrap();
    let resp = oracle_backend(&oracle_trailer(add.family, add.level, add.seed, &add.id)).unwrap();
    let got = crate::traces::extract_answer(&resp.text, TaskFamily::Addition).unwrap();
    assert!(got.matches(&add.gold_answer));

    assert!(matches!(
        oracle_backend("no trailer here"),
        Err(ClientError::Backend(_))
    ));
    assert!(matches!(
        oracle_backend("[oracle gsm8k 0 0 abcdef0123456789]"),
        Err(ClientError::Backend(_))
    ));
    // tampered id is rejected
    let tampered = oracle_trailer(inst.family, inst.level, inst.seed, "0000000000000000");
    assert!(matches!(oracle_backend(&tampered), Err(ClientError::Backend(_))));
}

#[test]
fn fixed_dp_sequence_renders_expected_ending() {
    // the documented oracle example: dp over [3,2,1,5]
    let inst = crate::tasks::TaskInstance {
        id: "manual".into(),
        family: TaskFamily::DynProg,
        level: 4,
        seed: 0,
        payload: crate::tasks::Payload::Sequence { values: vec![3, 2, 1, 5] },
        gold_answer: crate::tasks::GoldAnswer::Integer(8),
    };
    let text = render(&gold_trace(&inst).unwrap());
    assert!(text.contains("The highest sum is D[0]=8"));
}
