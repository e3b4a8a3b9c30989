"""Prompt-based coding with a scripted offline transport.

Previews the exact prompt sent for one utterance, then codes the whole
corpus twice against a disk cache to show the warm-cache contract, and
finally demonstrates that malformed model answers never abort a run.

    python demos/02_automatic_coding.py
"""

import tempfile

from cps_synergy.coder import (
    CoderConfig,
    MockTransport,
    PromptSpec,
    build_prompt,
    code_corpus,
    render_codebook,
)
from cps_synergy.demo import build_demo_corpus

utterances, _profiles = build_demo_corpus()

# What a coding request looks like: role, codebook, context, message, format.
target = utterances[7]
preceding = [u.text for u in utterances if u.group_id == target.group_id and u.seq < target.seq][-5:]
spec = PromptSpec(render_codebook(shot_mode="zero_shot"), tuple(preceding), target.text, "zero_shot")
print("=== prompt preview ===")
print(build_prompt(spec))
print("=" * 40)

with tempfile.TemporaryDirectory() as cache_dir:
    config = CoderConfig(model_name="demo-mock", cache_dir=cache_dir, max_in_flight=4)

    # a transport that echoes the known human code: a perfect (mock) coder
    transport = MockTransport(lambda u: u.code_human.value)
    coded, report = code_corpus(utterances, config, shot_mode="zero_shot", transport=transport)
    print(f"\nfirst run:  coded {report.coded}/{report.total}, "
          f"{report.transport_calls} transport calls, {report.cache_hits} cache hits")

    coded, report = code_corpus(utterances, config, shot_mode="zero_shot", transport=transport)
    print(f"second run: coded {report.coded}/{report.total}, "
          f"{report.transport_calls} transport calls, {report.cache_hits} cache hits (warm cache)")

# Chatty or confused answers degrade gracefully into per-utterance failures.
noisy = MockTransport(
    lambda u: {0: "The code is S2.", 1: "W1", 2: "I cannot decide."}[u.seq % 3]
)
coded, report = code_corpus(utterances[:30], CoderConfig(model_name="noisy-mock"), transport=noisy)
print(f"\nnoisy transport: {report.coded} coded, {report.failed} failures, run completed anyway")
for uid, reason in report.failures[:3]:
    print(f"  {uid}: {reason}")
