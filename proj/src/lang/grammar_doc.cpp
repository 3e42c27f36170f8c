#include "pibr/lang.hpp"

namespace pibr::lang {

const std::string& grammar_doc() {
  static const std::string doc = R"(POLICY LANGUAGE
A program is zero or more definitions followed by exactly one policy form:
  (def name (param ...) body)
  (policy (h) body)
Expressions:
  numbers      42  -2  0.5  1e-3
  symbols      parameters, let names, def names, builtins, true, false
  (if cond then else)              cond must be a boolean
  (let ((name expr) ...) body)     bindings are sequential
  (lambda (param ...) body)        first-class function
  (and expr ...) (or expr ...)     short-circuit, booleans only
  (f arg ...)                      call a builtin, def or lambda
Builtins:
  + - * / %  (numbers; - with one argument negates; / and % fail on zero)
  < <= > >= = !=  (= and != also compare booleans)
  not abs floor
  min max    (numbers, or a single non-empty list of numbers)
  len (list ...) (get list index) (append list value) -> new list with value at the end
  (range n) -> [0, ..., n-1]   (range a b) -> [a, ..., b-1]
  (fold f init list)           -> f(...f(f(init, x0), x1)..., xn)
Comments run from ; to the end of the line. There is no mutation, I/O or
randomness; evaluation is capped by a step budget (fuel) and call depth 256.
Calling convention:
  h is the two-element list [states, actions]. states is a list of states,
  oldest first, one more than the number of joint actions; the current state
  is (get (get h 0) (- (len (get h 0)) 1)). actions is a list of [a0, a1]
  joint actions. The policy returns a list of n_actions non-negative numbers
  summing to 1: the probability of each action, e.g. (list 1 0 0).
)";
  return doc;
}

}  // namespace pibr::lang
