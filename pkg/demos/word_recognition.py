"""
Isolated word recognition
=========================

Each vocabulary word gets one template (its log mel matrix). A new
utterance is assigned to the template with the smallest accumulated
DTW distance.
"""

import numpy as np

from navperception.dtw import DtwMode, classify, dtw_distance
from navperception.nav_policy import command_code
from navperception.speech_features import mel_spectrogram
from navperception.synth import VOCABULARY, synth_word

templates = [(w, mel_spectrogram(synth_word(w, seed=0))) for w in VOCABULARY]
print("template shape (channels x frames):", templates[0][1].shape)

# distances between templates
print(" " * 8 + "".join(f"{w:>9}" for w in VOCABULARY))
for a, ta in templates:
    print(f"{a:>8}" + "".join(f"{dtw_distance(ta, tb).distance:9.0f}" for _, tb in templates))

# quieter, noisier, different phases
rng = np.random.default_rng(0)
for word in VOCABULARY:
    x = 0.3 * synth_word(word, seed=99).samples + rng.normal(0, 0.005, 12000)
    for mode in DtwMode:
        label, dist, _ = classify(mel_spectrogram(np.clip(x, -1, 1)), templates, mode)
        print(f"said {word:<8} heard {label:<8} ({mode}, D={dist:.1f}) code={command_code(label)}")
