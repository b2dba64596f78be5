use std::io::Write;

fn main() {
    let result = ckballs::cli::run(std::env::args_os());
    let text = result.render();
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    if result.exit_code != 0 {
        if let Some(msg) = result.stdout_payload.get("message").and_then(|m| m.as_str()) {
            eprintln!("ckballs: {msg}");
        }
    }
    drop(out);
    std::process::exit(result.exit_code);
}
