#pragma once

// Generated by scripts/embed_templates.py from assets/templates/.
// Do not edit by hand; rerun the script after changing an asset.

#include <string_view>

namespace haluj::templates_data {

inline constexpr std::string_view kTplGenPartialIrrelevant =
    R"HALUJ_TPL(I'll provide you with a claim and an associated evidence snippet. At the same time, you will be informed of the correctness of this claim. Your task is to output 4 other pieces of evidence related to the body of the claim, which has the following requirements:
1. The subject is the same as the subject in the claim
2. Do not contradict the information in the existing evidence
3. Don't support or oppose claim. This evidence should be a useless piece of information to judge the correctness of the claim
4. The length of the generated evidence should be close to the length of the provided evidence which is often  7-8 sentences
[claim]: {claim}
[evidence]: {evidence}
[correctness]: {label}

Here is your output format(a list of string with the length of 4):
["evidence1", "evidence2", "evidence3", "evidence4"]
Respond in the correct format directly.
)HALUJ_TPL";

inline constexpr std::string_view kTplGenMisleading =
    R"HALUJ_TPL(I'll provide you with a claim and an associated evidence snippet. At the same time, you will be informed of the correctness of this claim. Your task is to output 3 other pieces of evidence related to the body of the claim, which has the following requirements:
1. Do not contradict the information in the existing evidence
2. The length of the generated evidence should be close to the length of the provided evidence, which is often  7-8 sentences
3. The evidence should not change the correctness of the claim, which is true. However, the evidence needs to contain confusing information to mislead the reader into believing that the claim is {opposite_label} (which is actually {label})
4. The misleading information needs to be deceptive enough.
5. Try to vary the pieces of evidence you generate and make them have different misleading points.

[claim]: {claim}
[evidence]: {evidence}
[correctness]: {label}

Here is your output format(a list of python dictionaries with the length of 3):
[{{
    "evidence": the evidence you generate,
    "explanation": What's the misleading information in the evidence(briefly)
}},...]

Respond in the correct format directly.
)HALUJ_TPL";

inline constexpr std::string_view kTplFilterMisleading =
    R"HALUJ_TPL(I'll provide you with a claim and associated evidence. At the same time, you will be informed of the correctness of this claim. Your task is to classify whether the evidence changes the correctness of the claim. If the correctness of the claim is neutral, it means either the supporting or the opposing evidence should be considered changing the correctness of the claim while the evidence neither supports or refutes the claim should be considered maintaining the correctness of the claim.

[claim]: {claim}
[label]: {label}
[evidence]: {evidence}

Here is your output format(a python dictionary):
[{{
    "explanation": the reason of your classification,
    "classification": True or False. True if the evidence maintains the correctness of the claim and False if the evidence changes the correctness of the claim
}}]
)HALUJ_TPL";

inline constexpr std::string_view kTplSynthGolden =
    R"HALUJ_TPL(I'm now training a large language model for claim verification. I expect it to generate high-quality critique given claim and evidence. Your task is to help me produce training datas.

Here is the given prompt I used for training:
[prompt used for training] 
You are given a claim. Your task is to identify whether there are any factual errors within the claim based on the given evidence.
The response should be a python dictionary with two keys - "reasoning", "factuality", which correspond to the reasoning and whether the given claim is factual or not (string - True, False or Neutral)
The following is the given claim
{claim}
The following is the provided evidences:
{formatted_evidences}

Now you'll get additional key information to help generate the 'golden' response expected.
{additional_info}
Most importantly, the factuality of the claim is {label}. Stick to this label when generating response.

Your task is to use the above additional information to output the 'golden' response as training datas, while making sure that you do not show that you got the extra information.

A 'golden' response requires the following requirements:
1. Be specific and complete in your response
2. Your response should start with an short assertion about the factuality of the claim like the factuality of the claim xxx is true / false / neutral
3. The response needs to go through each piece of evidence and analyze its relationship to the claim, which means you should analyze from the first evidence one by one
4. For evidence that is completely unrelated, you can briefly analyze it and point out that it is not related to the claim
5. For evidence that is basically unrelated to the content, you can briefly analyze and point out the reason like although it has the same subject as the claim, the content has nothing to do with the claim
6. For evidence with highly relevant content, give a reasonable analysis of whether the evidence support or oppose the claim, or neither support nor oppose it (take care to refer to the additional information I have provided you above, and do not show that you have this information. e.g. Be careful when using word like 'mislead'. The so-called misleading evidence is systhesized by me to mislead the chatbots. However, in real scenario, you should just regard it as a highly related but confusing evidence. You can not regard it as a wrong or misleading evidence)
7. When you go through the misleading evidence (which in real scenarios is highly related and confusing evidence) with explanation, you can consider include the information and discussion in the explanation in your analysis. You can also demonstrate the relevance between the claim and the evidence first.
8. At the end of the response, there needs to be a summary, which synthesizes the above analysis and derives the factuality of the claim

You should only respond in format as described below. DO NOT RETURN ANYTHING ELSE. START YOUR RESPONSE WITH '{{'.
{{
    "reasoning": "Why is the given claim factual non-factual or neutral? You must provide specific evidences to support your decision.",
    "factuality": "True" if the given claim is totally supported by the evidences, "False" if the given claim contradicts the evidences in some way, "Neutral" if evidence neither supports nor refutes the claim.
}}
)HALUJ_TPL";

inline constexpr std::string_view kTplReformatGolden =
    R"HALUJ_TPL(Given a claim, a set of evidence and a critique, your task is to reformat the critique.

CLAIM: {claim}
EVIDENCES: {evidence}
CRITIQUE: {critique}

The format of expected critique is as follows:

To verify the factuality of the claim, the reasoning is as follows.
[Completely Irrelevant Evidence]
A discussion and analysis of completely irrelevant evidence
[Partial Irrelevant Evidence]
A discussion and analysis of partial irrelevant evidence. The evidence must be analyzed case by case. You should point out the relevant and irrelevant information in the evidence respectively.
[Highly related Evidence]
A discussion and analysis of highly related evidence. The evidence must be analyzed case by case. You should dive into the details and discuss the relationship between the evidence and the claim.
[Conclusion]
Aggregate the analysis above and conclude whether the claim is true, false, or neutral

Your task is only reformat the critique. Don't change any reasoning or information in the original critique.
Output the reformatted critique directly.
)HALUJ_TPL";

inline constexpr std::string_view kTplScoreCritique =
    R"HALUJ_TPL(I'm designing verifiers to judge whether a specific claim is correct based on evidence. There are three possible situations: Neutral / True / False. I am evaluating the quality of the verifier's responses. Your task is to score the response provided. The score range is 1-100. The ideal standard for responses are as follows:

The response should clearly point out whether the content of each piece of evidence is relevant to the claim.
The response should clearly identify the span in the claim that is particularly relevant to the relevant context in the evidence.
The response should clearly compare the related information in the claim and the evidence and provide a reasonable explanation. The explanation should be clear and reasonable.
The response should maintain faithfulness. It should not assert that the claim supports something not present in the original claim, nor should it suggest that the evidence supports something not found in the original evidence.
The response should ensure completeness, that is, all parts of the evidence that are highly relevant to the claim should be analyzed, and nothing should be omission.
The response should have a clear and reasonable logical reasoning process.

Here is the prompt for the verifier, which contains the claim and the evidence: 
{prompt}

Here is the response generated by the verifier: 
{response}

Try to be objective and start your response directly(low score for poor responses is encouraged)

You should only respond in format as described below. DO NOT RETURN ANYTHING ELSE. START YOUR RESPONSE WITH '{{'.
{{
    "reasoning": "a brief explanation of your score",
    "score": the score you provide
}}
)HALUJ_TPL";

inline constexpr std::string_view kTplExtractCategories =
    R"HALUJ_TPL(I'll provide you with a set of evidence and a critique based on provided evidence.
Your task is to classify evidence into three categories which are [Completely Irrelevant Evidence], [Partial Irrelevant Evidence], and [Highly related Evidence].
You should strictly stick to the classification statements of the critique and don't change its meaning.
Evidence corresponding to the content in [Completely Irrelevant Evidence] should be matched to "Completely Irrelevant Evidence" category.
Evidence corresponding to the content in [Partial Irrelevant Evidence] should be matched to "Partial Irrelevant Evidence" category.
Evidence corresponding to the content in [Highly related Evidence] should be matched to "Highly related Evidence" category.
If there is evidence doen't correspond to any content in the critique, it should be matched to "Unmentioned" category.

Here is the evidence:

{evidence}

Here is the critique:

{critique}

Respond in a python dictionary with the following format:
{{
    "Completely Irrelevant Evidence":[evidence_number, evidence_number, ...],
    "Partial Irrelevant Evidence":[evidence_number, evidence_number, ...],
    "Highly related Evidence":[evidence_number, evidence_number, ...],
    "Unmentioned Evidence":[evidence_number, evidence_number, ...]
}}
Output in correct format directly.
)HALUJ_TPL";

inline constexpr std::string_view kTplDetectionFormatted =
    R"HALUJ_TPL(You are given claim. Your task is to identify whether there are any factual errors within the claim.
When you are judging the factuality of the given claim, you could reference the provided evidences if needed. The provided evidences may be helpful. Some evidences may contradict to each other. You must be careful when using the evidences to judge the factuality of the given claim.
The response should be a dictionary with two keys - "reasoning", "factuality", which correspond to the reasoning and whether the given claim is factual or not (string - True, False or Neutral)
The following is the given claim

[claim]: {claim}

The following is the provided evidences
[evidences]: 
{evidences}

You should only respond in format as described below. DO NOT RETURN ANYTHING ELSE. START YOUR RESPONSE WITH '{{'.
[response format]: 
{{
    "reasoning": "Why is the given claim factual non-factual or neutral? You must provide specific evidences to support your decision.",
    "factuality": "True" if the given claim is totally supported by the evidences, "False" if the given claim contradicts the evidences in some way, "Neutral" if part of the given claim is supported by evidence, but there is also some information that cannot be determined as correct or incorrect.
}}
)HALUJ_TPL";

inline constexpr std::string_view kTplDetectionPlain =
    R"HALUJ_TPL(You are given claim. Your task is to identify whether there are any factual errors within the claim.
When you are judging the factuality of the given claim, you could reference the provided evidences if needed. The provided evidences may be helpful. Some evidences may contradict to each other. You must be careful when using the evidences to judge the factuality of the given claim.
The response should be a dictionary with two keys - "reasoning", "factuality", which correspond to the reasoning and whether the given claim is factual or not (string - True, False or Neutral)
The following is the given claim

[claim]: {claim}

The following is the provided evidences
[evidences]: 
{evidences}
)HALUJ_TPL";

}  // namespace haluj::templates_data
