"""
Programs with two loops
=======================

A training loop followed by an evaluation loop gives two different
repeated patterns in one trace. Declaring both iteration counts mines one
pattern per loop from the same suffix tree.
"""

from itermine import MiningConfig, TokenSequence, mine_patterns_multi

names = ["init_a", "init_b"] + ["fwd", "bwd", "step"] * 50 + ["eval_fwd", "eval_metric"] * 20 + ["save"]
vocab = list(dict.fromkeys(names))
seq = TokenSequence([vocab.index(n) for n in names], vocab, list(range(len(names))), stream=13)

train, evaluate = mine_patterns_multi(seq, [MiningConfig(50), MiningConfig(20)])
print("training step :", seq.names(train.tokens), f"x{train.count}")
print("evaluation    :", seq.names(evaluate.tokens), f"x{evaluate.count}")
