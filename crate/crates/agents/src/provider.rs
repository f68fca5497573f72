//! Request and response shapes for the supported chat APIs.

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::AgentConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    /// `{"model", "temperature", "prompt", "image"}` in, `{"text"}` out.
    #[default]
    Generic,
    Openai,
    Anthropic,
    Gemini,
}

/// Image bytes sent alongside a prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageAttachment {
    pub media_type: String,
    pub bytes: Vec<u8>,
}

impl ImageAttachment {
    pub fn base64(&self) -> String {
        base64::engine::general_purpose::STANDARD.encode(&self.bytes)
    }
}

/// Media type from the file extension; `None` for unknown extensions.
pub fn media_type_for(path: &str) -> Option<&'static str> {
    let ext = path.rsplit_once('.')?.1.to_ascii_lowercase();
    Some(match ext.as_str() {
        "jpg" | "jpeg" => "image/jpeg",
        "png" => "image/png",
        "gif" => "image/gif",
        "webp" => "image/webp",
        _ => return None,
    })
}

/// Headers (beyond content type) and JSON body for one call.
pub fn build_request(
    agent: &AgentConfig,
    credential: Option<&str>,
    prompt: &str,
    image: Option<&ImageAttachment>,
) -> (Vec<(&'static str, String)>, Value) {
    let mut headers = Vec::new();
    let body = match agent.provider {
        Provider::Generic => {
            if let Some(key) = credential {
                headers.push(("authorization", format!("Bearer {key}")));
            }
            let mut body = json!({
                "model": agent.model_id,
                "temperature": agent.temperature,
                "prompt": prompt,
            });
            if let Some(img) = image {
                body["image"] = json!({"media_type": img.media_type, "data": img.base64()});
            }
            body
        }
        Provider::Openai => {
            if let Some(key) = credential {
                headers.push(("authorization", format!("Bearer {key}")));
            }
            let mut content = vec![json!({"type": "text", "text": prompt})];
            if let Some(img) = image {
                content.push(json!({
                    "type": "image_url",
                    "image_url": {"url": format!("data:{};base64,{}", img.media_type, img.base64())},
                }));
            }
            json!({
                "model": agent.model_id,
                "temperature": agent.temperature,
                "max_tokens": agent.max_tokens,
                "messages": [{"role": "user", "content": content}],
            })
        }
        Provider::Anthropic => {
            if let Some(key) = credential {
                headers.push(("x-api-key", key.to_string()));
            }
            headers.push(("anthropic-version", "2023-06-01".to_string()));
            let mut content = Vec::new();
            if let Some(img) = image {
                content.push(json!({
                    "type": "image",
                    "source": {"type": "base64", "media_type": img.media_type, "data": img.base64()},
                }));
            }
            content.push(json!({"type": "text", "text": prompt}));
            json!({
                "model": agent.model_id,
                "temperature": agent.temperature,
                "max_tokens": agent.max_tokens,
                "messages": [{"role": "user", "content": content}],
            })
        }
        Provider::Gemini => {
            if let Some(key) = credential {
                headers.push(("x-goog-api-key", key.to_string()));
            }
            let mut parts = vec![json!({"text": prompt})];
            if let Some(img) = image {
                parts.push(json!({"inline_data": {"mime_type": img.media_type, "data": img.base64()}}));
            }
            json!({
                "contents": [{"role": "user", "parts": parts}],
                "generationConfig": {"temperature": agent.temperature, "maxOutputTokens": agent.max_tokens},
            })
        }
    };
    (headers, body)
}

/// The model's text from a successful response body.
pub fn extract_text(provider: Provider, body: &Value) -> Option<String> {
    match provider {
        Provider::Generic => body.get("text")?.as_str().map(str::to_string),
        Provider::Openai => body.pointer("/choices/0/message/content")?.as_str().map(str::to_string),
        Provider::Anthropic => {
            let blocks = body.get("content")?.as_array()?;
            let text: Vec<&str> = blocks
                .iter()
                .filter(|b| b.get("type").and_then(Value::as_str) == Some("text"))
                .filter_map(|b| b.get("text")?.as_str())
                .collect();
            (!text.is_empty()).then(|| text.concat())
        }
        Provider::Gemini => {
            let parts = body.pointer("/candidates/0/content/parts")?.as_array()?;
            let text: Vec<&str> = parts.iter().filter_map(|p| p.get("text")?.as_str()).collect();
            (!text.is_empty()).then(|| text.concat())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use memelabel_core::annotation::AgentRole;

    fn agent(provider: Provider) -> AgentConfig {
        let mut a = AgentConfig::new("a", "http://localhost/", "model-x", AgentRole::Annotator);
        a.provider = provider;
        a
    }

    #[test]
    fn request_shapes() {
        let img = ImageAttachment { media_type: "image/png".into(), bytes: vec![1, 2, 3] };
        let (h, body) = build_request(&agent(Provider::Generic), None, "hi", Some(&img));
        assert!(h.is_empty());
        assert_eq!(body["image"]["data"], "AQID");
        assert_eq!(body["temperature"], 0.0);

        let (h, body) = build_request(&agent(Provider::Anthropic), Some("k"), "hi", Some(&img));
        assert!(h.contains(&("x-api-key", "k".to_string())));
        assert_eq!(body["messages"][0]["content"][1]["text"], "hi");

        let (h, body) = build_request(&agent(Provider::Openai), Some("k"), "hi", None);
        assert_eq!(h, vec![("authorization", "Bearer k".to_string())]);
        assert_eq!(body["messages"][0]["content"].as_array().unwrap().len(), 1);

        let (h, body) = build_request(&agent(Provider::Gemini), Some("k"), "hi", Some(&img));
        assert_eq!(h[0].0, "x-goog-api-key");
        assert_eq!(body["contents"][0]["parts"][1]["inline_data"]["mime_type"], "image/png");
    }

    #[test]
    fn response_text() {
        assert_eq!(extract_text(Provider::Generic, &json!({"text": "x"})).as_deref(), Some("x"));
        let openai = json!({"choices": [{"message": {"content": "y"}}]});
        assert_eq!(extract_text(Provider::Openai, &openai).as_deref(), Some("y"));
        let anthropic = json!({"content": [{"type": "text", "text": "a"}, {"type": "text", "text": "b"}]});
        assert_eq!(extract_text(Provider::Anthropic, &anthropic).as_deref(), Some("ab"));
        let gemini = json!({"candidates": [{"content": {"parts": [{"text": "g"}]}}]});
        assert_eq!(extract_text(Provider::Gemini, &gemini).as_deref(), Some("g"));
        assert_eq!(extract_text(Provider::Openai, &json!({})), None);
    }

    #[test]
    fn media_types() {
        assert_eq!(media_type_for("images/a.JPG"), Some("image/jpeg"));
        assert_eq!(media_type_for("a.webp"), Some("image/webp"));
        assert_eq!(media_type_for("noext"), None);
    }
}
