// Copyright 2026 The minpair Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string_view>

namespace minpair::grammars {

// Across-the-board movement. The gapped coordinate ends at the adverb; the
// ungapped one fills the object position first.
inline constexpr std::string_view kAcrossTheBoard = R"(# Across-the-board movement
%phenomenon ATB
%spillover SPILLOVER
%condition +filler+gap G=+ grammatical
%condition +filler-gap G=- ungrammatical
%criterion +filler+gap > +filler-gap
S -> <PREAMBLE> <F> <±G> <SPILLOVER>
<PREAMBLE> -> 'I know' <WH> <EMBEDDER>
<WH> -> 'which boys' | 'which girls' | 'which students' | 'which teachers'
<EMBEDDER> -> 'you think' | 'we believe' | 'they say' | 'you said'
<F> -> 'that' <NAME1> <VP1> <ADV1>
<+G> -> <LINK> <NAME2> <VP2> !<ADV2>
<-G> -> <LINK> <NAME2> <VP2> !<OBJ> <ADV2>
<NAME1> -> 'Bob' | 'John' | 'Paul' | 'Tom'
<NAME2> -> 'Mary' | 'Jennifer' | 'Susan' | 'Linda'
<LINK> -> 'and that'
<ADV1> -> 'shortly' | 'eventually' | 'later'
<ADV2> -> 'soon' | 'today' | 'now' | 'tomorrow'
<VP1> -> 'will meet' | 'will see' | 'will call'
<VP2> -> 'will hug' | 'will slap' | 'will kiss' | 'will thank'
<OBJ> -> 'you' | 'us' | 'Kim' | 'them'
<SPILLOVER> -> 'or some other time' | 'or next week'
)";

// Parasitic gaps. Only the +filler conditions are generated; the -F
// variant is kept for completeness of the template.
inline constexpr std::string_view kParasiticGap = R"(# Parasitic gaps
%phenomenon PG
%spillover SPILLOVER
%condition +filler+gap F=+ G=+ grammatical
%condition +filler-gap F=+ G=- ungrammatical
%criterion +filler+gap > +filler-gap
S -> <PREAMBLE> <±F> <±G> <SPILLOVER>
<PREAMBLE> -> 'I know'
<+F> -> 'who' <NAME1> <GEN> <NP>
<-F> -> 'that' <NAME1> <GEN> <NP> <NAME2>
<+G> -> <LINK> <V> !<ADV>
<-G> -> <LINK> <V> !<OBJ> <ADV>
<GEN> -> "'s"
<NP> -> <NP_SIMPLE> | <NP_COMPLEX>
<NP_SIMPLE> -> <GERUND>
<NP_COMPLEX> -> <N_EMBEDDED> 'to' <V_EMBEDDED>
<NAME1> -> 'Bob' | 'John' | 'Paul' | 'Tom'
<NAME2> -> 'Mary' | 'Jennifer' | 'Susan' | 'Linda'
<LINK> -> 'is about to' | 'is likely to' | 'is going to' | 'is expected to'
<V> -> 'bother' | 'annoy' | 'disturb'
<OBJ> -> 'you' | 'us' | 'Kim' | 'them'
<GERUND> -> 'talking to' | 'dancing with' | 'playing with'
<N_EMBEDDED> -> 'decision' | 'intent' | 'effort' | 'attempt' | 'failure'
<V_EMBEDDED> -> 'talk to' | 'call' | 'meet' | 'dance with' | 'play with'
<ADV> -> 'soon' | 'eventually' | 'later'
<SPILLOVER> -> 'or some other time' | 'or next week'
)";

// That-trace effects: all four (±that, ±trace) cells. The criterion uses
// the +that pair only.
inline constexpr std::string_view kThatTrace = R"(# That-trace effects
%phenomenon TTE
%condition +that+trace C=+ T=+ ungrammatical
%condition +that-trace C=+ T=- grammatical
%condition -that+trace C=- T=+ grammatical
%condition -that-trace C=- T=- grammatical
%criterion +that-trace > +that+trace
S -> <PREAMBLE> <F> <EMBEDDING_SUBJ> <EMBEDDING_VERB> <±C> <±T>
<PREAMBLE> -> 'He knows' | 'The boy asked' | 'The girl knew' | 'She wonders' | 'They asked' | 'We know'
<F> -> 'who'
<EMBEDDING_SUBJ> -> 'you' | 'we' | 'they'
<EMBEDDING_VERB> -> 'think' | 'believe' | 'say' | 'suppose'
<+C> -> 'that'
<-C> -> ''
<+T> -> !<TARGET_VERB> <TARGET_SUBJ>
<-T> -> !<TARGET_SUBJ> <TARGET_VERB>
<TARGET_SUBJ> -> 'people' | 'children' | 'parents' | 'scientists' | 'kids'
  | 'students' | 'teachers' | 'doctors' | 'nurses' | 'farmers'
  | 'artists' | 'writers' | 'lawyers' | 'soldiers' | 'workers'
  | 'players' | 'singers' | 'dancers' | 'pilots' | 'drivers'
  | 'engineers' | 'officers' | 'friends' | 'neighbors' | 'visitors'
  | 'tourists' | 'actors' | 'judges' | 'athletes' | 'editors'
<TARGET_VERB> -> 'are' | 'have' | 'ate' | 'got' | 'saw' | 'met'
  | 'like' | 'love' | 'know' | 'need' | 'want' | 'help'
  | 'see' | 'visited' | 'called' | 'found' | 'helped' | 'liked'
  | 'loved' | 'knew' | 'needed' | 'wanted' | 'trust' | 'hate'
  | 'hated' | 'praised' | 'admire' | 'admired' | 'thanked' | 'invited'
)";

}  // namespace minpair::grammars
