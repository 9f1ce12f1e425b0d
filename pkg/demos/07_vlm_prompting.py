"""
Structured VLM prompting, validation, and retries
=================================================

Every retained artifact gets a byte-stable prompt carrying the JSON schema,
a worked example, and the response guidelines. Responses are parsed with a
tolerant JSON extractor and validated strictly; malformed answers are
retried a bounded number of times.
"""

import numpy as np

from veritas import ScriptedVlm, build_prompt, default_descriptor_library, parse_vlm_response
from veritas.explainer import explain_retained

library = default_descriptor_library()
print(f"default library carries {len(library)} descriptors, e.g.:")
for d in library[:3]:
    print(f"  {d.name} ({d.category})")

descriptor = next(d for d in library if d.name == "misaligned_body_panels")
prompt = build_prompt(descriptor)
print("\n--- prompt -------------------------------------------")
print(prompt)
print("------------------------------------------------------")

# The parser tolerates chatter around the object but rejects schema breaks.
ok = parse_vlm_response(
    'Sure! {"artifact": "misaligned_body_panels", "description": "Noticeable seam offset '
    'along the left door panel."} Anything else?',
    valid_names=[d.name for d in library],
)
print("\nparsed:", ok.artifact, "->", ok.description)

# A flaky model that answers garbage once, then complies: the retry loop
# lands the explanation on the second call.
flaky = ScriptedVlm(script=[
    "hmm, I see several issues here",
    '{"artifact": "misaligned_body_panels", "description": "Clearly seen gap under the rear arch."}',
])
records, failures = explain_retained(
    [descriptor], flaky, np.zeros((8, 8, 3)), retries=2, valid_names=[d.name for d in library]
)
print(f"retry demo: {len(records)} explanation(s), {len(failures)} failure(s), "
      f"{records[0].calls} calls used")
